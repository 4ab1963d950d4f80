use num_complex::Complex64;

use super::DacConfig;
use crate::error::{Error, Result};
use crate::signal::IqStream;

/// `sum_k rho_k t^k` and its derivative, Horner form.
pub(crate) fn poly(rho: &[f64], t: f64) -> (f64, f64) {
    let mut value = 0.0;
    let mut slope = 0.0;
    for (k, &r) in rho.iter().enumerate().rev() {
        // coefficient of t^(k+1)
        slope = slope * t + (k as f64 + 1.0) * r;
        value = (value + r) * t;
    }
    (value, slope)
}

pub fn dac_sample(x: Complex64, cfg: &DacConfig) -> Complex64 {
    Complex64::new(poly(&cfg.rho, x.re).0, poly(&cfg.rho, x.im).0)
}

/// Matched-DAC polynomial applied independently to I and Q.
pub fn dac_convert(x: &IqStream, cfg: &DacConfig) -> Result<IqStream> {
    let out = x.with_samples(x.samples.iter().map(|&s| dac_sample(s, cfg)).collect());
    match out.first_non_finite() {
        Some(index) => Err(Error::NonFinite {
            stage: "dac",
            index,
        }),
        None => Ok(out),
    }
}
