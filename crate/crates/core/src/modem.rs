//! Square QAM constellations with per-axis reflected Gray labelling.
//!
//! A symbol index *is* its bit label read MSB first: the upper half of the
//! bits select the in-phase level and the lower half the quadrature level.
//! Levels along each axis follow reflected Gray order, so grid neighbours
//! differ in exactly one bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a message / constellation point, `0..M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolIndex(pub usize);

impl SymbolIndex {
    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl From<usize> for SymbolIndex {
    fn from(v: usize) -> Self {
        SymbolIndex(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    bits_per_symbol: usize,
    side: usize,
}

fn gray(p: usize) -> usize {
    p ^ (p >> 1)
}

fn gray_inverse(mut g: usize) -> usize {
    let mut p = g;
    while g > 0 {
        g >>= 1;
        p ^= g;
    }
    p
}

/// Gray-coded square QAM normalised to unit average symbol energy.
pub fn build_qam(order: usize) -> Result<Constellation> {
    if !matches!(order, 4 | 16 | 64) {
        return Err(Error::UnsupportedOrder(order));
    }
    let bits_per_symbol = order.trailing_zeros() as usize;
    let half = bits_per_symbol / 2;
    let side = 1usize << half;
    // mean of level^2 over {±1, ±3, ...} is (side^2 - 1)/3 per axis
    let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip();
    let level = |bits: usize| (2.0 * gray_inverse(bits) as f64 - (side as f64 - 1.0)) * scale;
    let points = (0..order)
        .map(|idx| {
            let i_bits = idx >> half;
            let q_bits = idx & (side - 1);
            Complex64::new(level(i_bits), level(q_bits))
        })
        .collect();
    Ok(Constellation {
        points,
        bits_per_symbol,
        side,
    })
}

impl Constellation {
    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Grid coordinates `(column, row)` of a symbol, both in `0..sqrt(M)`.
    pub fn grid_position(&self, s: SymbolIndex) -> (usize, usize) {
        let half = self.bits_per_symbol / 2;
        (
            gray_inverse(s.0 >> half),
            gray_inverse(s.0 & (self.side - 1)),
        )
    }

    /// Symbol at grid coordinates `(column, row)`.
    pub fn at_grid(&self, column: usize, row: usize) -> SymbolIndex {
        let half = self.bits_per_symbol / 2;
        SymbolIndex((gray(column) << half) | gray(row))
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn symbol(&self, index: usize) -> Result<SymbolIndex> {
        if index < self.order() {
            Ok(SymbolIndex(index))
        } else {
            Err(Error::SymbolOutOfRange {
                index,
                order: self.order(),
            })
        }
    }

    pub fn map(&self, s: SymbolIndex) -> Complex64 {
        self.points[s.0]
    }

    /// Bit label of a symbol, MSB first.
    pub fn label(&self, s: SymbolIndex) -> Vec<u8> {
        (0..self.bits_per_symbol)
            .rev()
            .map(|b| ((s.0 >> b) & 1) as u8)
            .collect()
    }

    pub fn bit_errors(&self, sent: SymbolIndex, decided: SymbolIndex) -> u32 {
        (sent.0 ^ decided.0).count_ones()
    }

    pub fn bits_to_symbols(&self, bits: &[u8]) -> Result<Vec<SymbolIndex>> {
        let k = self.bits_per_symbol;
        if !bits.len().is_multiple_of(k) {
            return Err(Error::BitLength {
                len: bits.len(),
                bits_per_symbol: k,
            });
        }
        Ok(bits
            .chunks_exact(k)
            .map(|group| {
                SymbolIndex(
                    group
                        .iter()
                        .fold(0usize, |acc, &b| (acc << 1) | usize::from(b != 0)),
                )
            })
            .collect())
    }

    pub fn symbols_to_bits(&self, symbols: &[SymbolIndex]) -> Vec<u8> {
        symbols.iter().flat_map(|&s| self.label(s)).collect()
    }

    /// Minimum-distance slicer; ties go to the lowest index.
    pub fn demap_nearest(&self, y: Complex64) -> Result<SymbolIndex> {
        if !y.re.is_finite() || !y.im.is_finite() {
            return Err(Error::NonFinite {
                stage: "demap",
                index: 0,
            });
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(SymbolIndex(best))
    }

    pub fn min_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.min((a - b).norm());
            }
        }
        d
    }
}
