use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{MixerConfig, VcoConfig};
use crate::error::{Error, Result};
use crate::signal::IqStream;

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Largest CFO magnitude allowed by an oscillator stability of `f_ppm`.
pub fn cfo_bound(f_ppm: f64, f_c0_hz: f64) -> f64 {
    f_ppm * f_c0_hz / 1e6
}

/// Discrete Wiener phase process: `psi[0] = 0`, Gaussian increments.
///
/// Zero variance yields zeros without touching the generator.
pub fn sample_phase_noise<R: Rng + ?Sized>(
    n: usize,
    variance: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(variance >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "phase-noise variance {variance} must be >= 0"
        )));
    }
    let mut psi = vec![0.0; n];
    if variance == 0.0 {
        return Ok(psi);
    }
    let step = Normal::new(0.0, variance.sqrt()).expect("finite std");
    for i in 1..n {
        psi[i] = psi[i - 1] + step.sample(rng);
    }
    Ok(psi)
}

/// `x_I e^{j theta} + j g x_Q e^{-j theta}`.
#[inline]
pub fn iq_imbalance(x: Complex64, gain: f64, theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    Complex64::new(x.re * c + gain * x.im * s, x.re * s + gain * x.im * c)
}

pub(crate) fn mixer_phase(cfg: &MixerConfig, n: usize, sample_rate_hz: f64, psi: f64) -> f64 {
    2.0 * PI * cfg.cfo_hz * n as f64 / sample_rate_hz + psi
}

/// First up-conversion: IQ imbalance, then CFO and phase-noise rotation.
pub fn mixer_upconvert<R: Rng + ?Sized>(
    x: &IqStream,
    cfg: &MixerConfig,
    rng: &mut R,
) -> Result<IqStream> {
    cfg.validate()?;
    let psi = sample_phase_noise(x.len(), cfg.pn_variance_per_sample, rng)?;
    let (g, theta) = (cfg.gain(), cfg.phase_rad());
    let out = x
        .samples
        .iter()
        .zip(&psi)
        .enumerate()
        .map(|(n, (&s, &p))| {
            iq_imbalance(s, g, theta)
                * Complex64::cis(mixer_phase(cfg, n, x.sample_rate_hz, p))
        })
        .collect();
    Ok(x.with_samples(out))
}

/// Second up-conversion: VCO IQ imbalance, then its phase-noise rotation.
pub fn vco_upconvert<R: Rng + ?Sized>(
    x: &IqStream,
    cfg: &VcoConfig,
    rng: &mut R,
) -> Result<IqStream> {
    cfg.validate()?;
    let psi = sample_phase_noise(x.len(), cfg.pn_variance_per_sample, rng)?;
    let (g, theta) = (cfg.gain(), cfg.phase_rad());
    let out = x
        .samples
        .iter()
        .zip(&psi)
        .map(|(&s, &p)| iq_imbalance(s, g, theta) * Complex64::cis(p))
        .collect();
    Ok(x.with_samples(out))
}
