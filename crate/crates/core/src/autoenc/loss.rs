//! Legitimate cross-entropy, eavesdropper entropy and their weighted sum.

use crate::error::{Error, Result};
use crate::modem::SymbolIndex;

/// Probabilities are clamped to this floor before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Decoder output distribution over the message set.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftOutput {
    pub probs: Vec<f64>,
}

impl SoftOutput {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "not a probability vector (sum {sum})"
            )));
        }
        Ok(Self { probs })
    }

    pub fn decision(&self) -> SymbolIndex {
        SymbolIndex(argmax(&self.probs))
    }
}

/// Index of the largest entry; exact ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate().skip(1) {
        if p > v[best] {
            best = i;
        }
    }
    best
}

/// `-log2 P[label]`.
pub fn loss_r(probs: &[f64], label: SymbolIndex) -> f64 {
    -probs[label.0].max(PROB_FLOOR).log2()
}

/// `sum_i P_i ln P_i`; zero for a one-hot output, `-ln M` when uniform.
pub fn loss_e(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| p * p.max(PROB_FLOOR).ln()).sum()
}

pub fn loss_total(lr_val: f64, le_val: f64, alpha: f64) -> f64 {
    alpha * lr_val + (1.0 - alpha) * le_val
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_values() {
        let mut p = vec![0.0; 16];
        p[3] = 1.0;
        assert_eq!(loss_r(&p, SymbolIndex(3)), 0.0);
        let p = vec![0.5, 0.25, 0.25];
        assert_eq!(loss_r(&p, SymbolIndex(0)), 1.0);
        let u = vec![1.0 / 16.0; 16];
        assert!((loss_r(&u, SymbolIndex(7)) - 4.0).abs() < 1e-12);
        // clamped instead of infinite
        assert!((loss_r(&[1.0, 0.0], SymbolIndex(1)) - 1e-12f64.log2().abs()).abs() < 1e-9);
    }

    #[test]
    fn entropy_values() {
        let u = vec![1.0 / 16.0; 16];
        assert!((loss_e(&u) + 16f64.ln()).abs() < 1e-12);
        assert!((loss_e(&u) + 2.772_588_722_239_781).abs() < 1e-12);
        let mut one = vec![0.0; 16];
        one[0] = 1.0;
        assert_eq!(loss_e(&one), 0.0);
    }

    #[test]
    fn total_weighting() {
        assert_eq!(loss_total(4.0, -2.0, 1.0), 4.0);
        assert_eq!(loss_total(4.0, -2.0, 0.0), -2.0);
        let v = loss_total(4.0, -16f64.ln(), 0.5);
        assert!((v - 0.613_705_638_880_109_4).abs() < 1e-12);
    }

    #[test]
    fn argmax_tie_rule() {
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1, 0.4, 0.4, 0.1]), 1);
        let out = SoftOutput::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(out.decision(), SymbolIndex(2));
        assert!(SoftOutput::new(vec![0.2, 0.3]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn entropy_and_ce_bounds(raw in proptest::collection::vec(0.0f64..10.0, 16)) {
            let s: f64 = raw.iter().sum();
            proptest::prop_assume!(s > 1e-6);
            let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let le = loss_e(&p);
            proptest::prop_assert!(le <= 1e-12);
            proptest::prop_assert!(le >= -(16f64.ln()) - 1e-9);
            for i in 0..16 {
                proptest::prop_assert!(loss_r(&p, SymbolIndex(i)) >= 0.0);
            }
        }
    }
}
