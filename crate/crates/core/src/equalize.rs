//! Classical single-stream SIMO receivers and the analytic MRC BER oracle.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::modem::{Constellation, SymbolIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DecoderKind {
    Zf,
    Lmmse,
    Ml,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 3] = [DecoderKind::Zf, DecoderKind::Lmmse, DecoderKind::Ml];

    pub fn tag(self) -> &'static str {
        match self {
            DecoderKind::Zf => "ZF",
            DecoderKind::Lmmse => "LMMSE",
            DecoderKind::Ml => "ML",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ZF" => Ok(DecoderKind::Zf),
            "LMMSE" => Ok(DecoderKind::Lmmse),
            "ML" => Ok(DecoderKind::Ml),
            other => Err(Error::InvalidConfig(format!("unknown decoder {other:?}"))),
        }
    }
}

/// `h^H y`.
fn matched(y: &[Complex64], h: &[Complex64]) -> Complex64 {
    h.iter().zip(y).map(|(hi, yi)| hi.conj() * yi).sum()
}

fn energy(h: &[Complex64]) -> f64 {
    h.iter().map(|v| v.norm_sqr()).sum()
}

/// Unbiased channel inversion `h^H y / |h|^2`.
pub fn zf_equalize(y: &[Complex64], h: &[Complex64]) -> Result<Complex64> {
    let e = energy(h);
    if e == 0.0 {
        return Err(Error::ZeroChannel);
    }
    Ok(matched(y, h) / e)
}

/// Wiener-scaled estimate `es h^H y / (es |h|^2 + sigma2)`.
pub fn lmmse_equalize(y: &[Complex64], h: &[Complex64], sigma2: f64, es: f64) -> Complex64 {
    matched(y, h) * es / (es * energy(h) + sigma2)
}

/// Exhaustive `argmin_s |y - h s|^2`, lowest index on ties.
pub fn ml_decode(y: &[Complex64], h: &[Complex64], c: &Constellation) -> SymbolIndex {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, s) in c.points().iter().enumerate() {
        let d: f64 = y
            .iter()
            .zip(h)
            .map(|(yi, hi)| (yi - hi * s).norm_sqr())
            .sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    SymbolIndex(best)
}

/// Hard decision from any of the classical receivers.
pub fn decide(
    kind: DecoderKind,
    y: &[Complex64],
    h: &[Complex64],
    sigma2: f64,
    es: f64,
    c: &Constellation,
) -> Result<SymbolIndex> {
    match kind {
        DecoderKind::Zf => c.demap_nearest(zf_equalize(y, h)?),
        DecoderKind::Lmmse => c.demap_nearest(lmmse_equalize(y, h, sigma2, es)),
        DecoderKind::Ml => Ok(ml_decode(y, h, c)),
    }
}

/// Exact bit error rate of Gray-coded square M-QAM on AWGN at `Es/N0`
/// (linear), summing the per-bit-level error probabilities of each axis.
pub fn qam_ber_awgn(snr: f64, order: usize) -> f64 {
    let side = (order as f64).sqrt().round() as usize;
    let levels = side.trailing_zeros() as usize;
    let arg = (3.0 * snr / (2.0 * (order as f64 - 1.0))).sqrt();
    let mut total = 0.0;
    for k in 1..=levels {
        let w = 1usize << (k - 1);
        let terms = side - side / (1 << k);
        let mut pk = 0.0;
        for i in 0..terms {
            let t = i * w;
            let sign = if (t / side).is_multiple_of(2) { 1.0 } else { -1.0 };
            // floor(i 2^(k-1) / sqrt(M) + 1/2)
            let rounded = ((2 * t + side) / (2 * side)) as f64;
            pk += sign * (w as f64 - rounded) * erfc((2 * i + 1) as f64 * arg);
        }
        total += pk / side as f64;
    }
    total / levels as f64
}

/// Analytic BER at a post-combining SNR given in dB.
pub fn mrc_qam_ber_oracle(snr_db_effective: f64, order: usize) -> f64 {
    qam_ber_awgn(10f64.powf(snr_db_effective / 10.0), order)
}

/// MRC BER averaged over a set of channel energies `|h|^2` at a fixed
/// per-antenna SNR.
pub fn mrc_ber_over_gains(snr_db: f64, order: usize, gains: &[f64]) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    gains.iter().map(|g| qam_ber_awgn(g * snr, order)).sum::<f64>() / gains.len() as f64
}

/// MRC BER over i.i.d. Rayleigh fading with `n_rx` branches, integrating
/// the AWGN expression against the Gamma(n_rx, 1) law of `|h|^2`.
pub fn rayleigh_mrc_ber(snr_db: f64, order: usize, n_rx: usize) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    let n = n_rx as f64;
    let ln_norm = ln_gamma(n);
    let pdf = |g: f64| {
        if g <= 0.0 {
            0.0
        } else {
            ((n - 1.0) * g.ln() - g - ln_norm).exp()
        }
    };
    // composite Simpson; the Gamma tail beyond n + 40 sqrt(n) is negligible
    let upper = n + 40.0 * n.sqrt() + 20.0;
    let steps = 40_000;
    let dx = upper / steps as f64;
    let f = |g: f64| pdf(g) * qam_ber_awgn(g * snr, order);
    let mut acc = f(0.0) + f(upper);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * dx);
    }
    acc * dx / 3.0
}
