//! Geometric multipath SIMO channels and AWGN.
//!
//! `h = sum_l gain_l * g(aoa_l)` with `gain_l ~ CN(0, 1)`, AoA uniform on
//! `(-pi/2, pi/2)` and a half-wavelength ULA steering vector at the
//! receiver. The single transmit antenna contributes a unit steering gain.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub n_rx: usize,
    pub n_paths: usize,
    /// Antenna spacing over carrier wavelength.
    pub spacing_ratio: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            n_rx: 6,
            n_paths: 3,
            spacing_ratio: 0.5,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rx == 0 || self.n_paths == 0 || !(self.spacing_ratio > 0.0) {
            return Err(Error::InvalidConfig(
                "channel needs n_rx >= 1, n_paths >= 1 and spacing_ratio > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub gain: Complex64,
    /// Angle of arrival, radians.
    pub aoa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimoChannel {
    pub h: Vec<Complex64>,
    pub paths: Vec<Path>,
}

impl SimoChannel {
    pub fn norm_sqr(&self) -> f64 {
        self.h.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Rebuilds `h` from the stored paths.
    pub fn reconstruct(&self, spacing_ratio: f64) -> Vec<Complex64> {
        let mut h = vec![Complex64::new(0.0, 0.0); self.h.len()];
        for p in &self.paths {
            for (acc, g) in h.iter_mut().zip(steering(self.h.len(), p.aoa, spacing_ratio)) {
                *acc += p.gain * g;
            }
        }
        h
    }
}

/// Noise variance `E|n_i|^2` per receive antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub sigma2: f64,
}

/// ULA response `(1/sqrt(n)) [1, e^{-j 2 pi d sin(phi)}, ...]`.
pub fn steering(n: usize, phi: f64, spacing_ratio: f64) -> Vec<Complex64> {
    let amp = (n as f64).sqrt().recip();
    let step = -2.0 * PI * spacing_ratio * phi.sin();
    (0..n)
        .map(|k| Complex64::from_polar(amp, step * k as f64))
        .collect()
}

/// Circularly-symmetric complex Gaussian with `E|z|^2 = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

pub fn gen_channel<R: Rng + ?Sized>(cfg: &ChannelConfig, rng: &mut R) -> SimoChannel {
    let mut h = vec![Complex64::new(0.0, 0.0); cfg.n_rx];
    let paths: Vec<Path> = (0..cfg.n_paths)
        .map(|_| {
            let gain = complex_gaussian(rng, 1.0);
            let aoa = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            Path { gain, aoa }
        })
        .collect();
    for p in &paths {
        for (acc, g) in h.iter_mut().zip(steering(cfg.n_rx, p.aoa, cfg.spacing_ratio)) {
            *acc += p.gain * g;
        }
    }
    SimoChannel { h, paths }
}

/// i.i.d. `CN(0, 1)` entries; the reference fading model for analytic checks.
pub fn rayleigh_vector<R: Rng + ?Sized>(n_rx: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n_rx).map(|_| complex_gaussian(rng, 1.0)).collect()
}

/// Per-antenna noise variance for a given SNR: `es / 10^(snr/10)`.
pub fn snr_to_sigma2(snr_db: f64, symbol_energy: f64) -> f64 {
    symbol_energy / 10f64.powf(snr_db / 10.0)
}

/// `y = h x + n` with `n ~ CN(0, sigma2 I)`.
pub fn transmit<R: Rng + ?Sized>(
    x: Complex64,
    h: &[Complex64],
    noise: NoiseConfig,
    rng: &mut R,
) -> Vec<Complex64> {
    let mut y = Vec::with_capacity(h.len());
    transmit_into(x, h, noise, rng, &mut y);
    y
}

pub fn transmit_into<R: Rng + ?Sized>(
    x: Complex64,
    h: &[Complex64],
    noise: NoiseConfig,
    rng: &mut R,
    out: &mut Vec<Complex64>,
) {
    out.clear();
    if noise.sigma2 == 0.0 {
        out.extend(h.iter().map(|hi| hi * x));
    } else {
        out.extend(h.iter().map(|hi| hi * x + complex_gaussian(rng, noise.sigma2)));
    }
}

/// Writes `link,antenna,re,im` rows.
pub fn write_channels_csv<W: Write>(mut w: W, channels: &[(&str, &SimoChannel)]) -> Result<()> {
    writeln!(w, "link,antenna,re,im")?;
    for (link, ch) in channels {
        for (k, v) in ch.h.iter().enumerate() {
            writeln!(w, "{link},{k},{},{}", v.re, v.im)?;
        }
    }
    Ok(())
}
