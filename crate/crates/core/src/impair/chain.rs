use std::ops::Mul;

use num_complex::Complex64;
use rand::Rng;

use super::dac::{dac_sample, poly};
use super::oscillator::{iq_imbalance, mixer_phase, sample_phase_noise};
use super::pa::{saleh_gain, saleh_gain_slope, saleh_sample};
use super::ImpairmentConfig;
use crate::error::{Error, Result};
use crate::signal::IqStream;

/// Frozen per-sample rotations of the two oscillators (radians).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SamplePhases {
    /// CFO ramp plus mixer phase noise.
    pub mixer: f64,
    pub vco: f64,
}

/// Tap points along the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Digital,
    Dac,
    Mixer,
    Vco,
    Pa,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Digital,
        Stage::Dac,
        Stage::Mixer,
        Stage::Vco,
        Stage::Pa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Digital => "digital",
            Stage::Dac => "post-dac",
            Stage::Mixer => "post-mixer",
            Stage::Vco => "post-vco",
            Stage::Pa => "post-pa",
        }
    }
}

/// Real 2x2 Jacobian `d(out_I, out_Q) / d(in_I, in_Q)`, row = output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian(pub [[f64; 2]; 2]);

impl Jacobian {
    pub const IDENTITY: Jacobian = Jacobian([[1.0, 0.0], [0.0, 1.0]]);

    pub fn rotation(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Jacobian([[c, -s], [s, c]])
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// `J^T g`, used to pull an output gradient back to the input.
    pub fn transpose_apply(&self, g: Complex64) -> Complex64 {
        let m = &self.0;
        Complex64::new(
            m[0][0] * g.re + m[1][0] * g.im,
            m[0][1] * g.re + m[1][1] * g.im,
        )
    }

    /// Columns given as the complex images of the two input unit vectors.
    fn from_columns(d_in_i: Complex64, d_in_q: Complex64) -> Self {
        Jacobian([[d_in_i.re, d_in_q.re], [d_in_i.im, d_in_q.im]])
    }
}

impl Mul for Jacobian {
    type Output = Jacobian;

    fn mul(self, rhs: Jacobian) -> Jacobian {
        let (a, b) = (&self.0, &rhs.0);
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Jacobian(m)
    }
}

/// Draws the oscillator rotations for `len` consecutive samples.
///
/// The stream is cut into frames of `cfg.frame_len`; the CFO ramp and both
/// Wiener processes restart at each frame. Per frame the mixer noise is
/// drawn before the VCO noise, matching [`super::mixer_upconvert`] followed
/// by [`super::vco_upconvert`].
pub fn draw_phases<R: Rng + ?Sized>(
    len: usize,
    cfg: &ImpairmentConfig,
    rng: &mut R,
) -> Result<Vec<SamplePhases>> {
    let frame = if cfg.frame_len == 0 {
        len.max(1)
    } else {
        cfg.frame_len
    };
    let mut out = Vec::with_capacity(len);
    let mut start = 0;
    while start < len {
        let n = frame.min(len - start);
        let mixer = if cfg.enabled.mixer {
            let psi = sample_phase_noise(n, cfg.mixer.pn_variance_per_sample, rng)?;
            psi.iter()
                .enumerate()
                .map(|(k, &p)| mixer_phase(&cfg.mixer, k, cfg.sample_rate_hz, p))
                .collect()
        } else {
            vec![0.0; n]
        };
        let vco = if cfg.enabled.vco {
            sample_phase_noise(n, cfg.vco.pn_variance_per_sample, rng)?
        } else {
            vec![0.0; n]
        };
        out.extend(
            mixer
                .into_iter()
                .zip(vco)
                .map(|(mixer, vco)| SamplePhases { mixer, vco }),
        );
        start += n;
    }
    Ok(out)
}

/// Output of every stage for one sample, indexed like [`Stage::ALL`].
pub fn apply_stages(x: Complex64, cfg: &ImpairmentConfig, ph: SamplePhases) -> [Complex64; 5] {
    let on = cfg.enabled;
    let dac = if on.dac { dac_sample(x, &cfg.dac) } else { x };
    let mixer = if on.mixer {
        iq_imbalance(dac, cfg.mixer.gain(), cfg.mixer.phase_rad()) * Complex64::cis(ph.mixer)
    } else {
        dac
    };
    let vco = if on.vco {
        iq_imbalance(mixer, cfg.vco.gain(), cfg.vco.phase_rad()) * Complex64::cis(ph.vco)
    } else {
        mixer
    };
    let pa = if on.pa { saleh_sample(vco, &cfg.pa) } else { vco };
    [x, dac, mixer, vco, pa]
}

#[inline]
pub fn apply_sample(x: Complex64, cfg: &ImpairmentConfig, ph: SamplePhases) -> Complex64 {
    apply_stages(x, cfg, ph)[4]
}

fn imbalance_jacobian(gain: f64, theta: f64) -> Jacobian {
    let (s, c) = theta.sin_cos();
    Jacobian([[c, gain * s], [s, gain * c]])
}

/// Analytic Jacobian of the enabled chain at `x` for a frozen realisation.
pub fn chain_jacobian(x: Complex64, cfg: &ImpairmentConfig, ph: SamplePhases) -> Jacobian {
    let on = cfg.enabled;
    let mut j = Jacobian::IDENTITY;
    let mut v = x;
    if on.dac {
        let (re, dre) = poly(&cfg.dac.rho, v.re);
        let (im, dim) = poly(&cfg.dac.rho, v.im);
        j = Jacobian([[dre, 0.0], [0.0, dim]]) * j;
        v = Complex64::new(re, im);
    }
    if on.mixer {
        let (g, t) = (cfg.mixer.gain(), cfg.mixer.phase_rad());
        j = Jacobian::rotation(ph.mixer) * imbalance_jacobian(g, t) * j;
        v = iq_imbalance(v, g, t) * Complex64::cis(ph.mixer);
    }
    if on.vco {
        let (g, t) = (cfg.vco.gain(), cfg.vco.phase_rad());
        j = Jacobian::rotation(ph.vco) * imbalance_jacobian(g, t) * j;
        v = iq_imbalance(v, g, t) * Complex64::cis(ph.vco);
    }
    if on.pa {
        let b = cfg.pa.input_scale;
        let u = v * b;
        let s = u.norm_sqr();
        let c = saleh_gain(&cfg.pa, s);
        let dc = saleh_gain_slope(&cfg.pa, s, c);
        let d_i = (c + u * dc * (2.0 * u.re)) * b;
        let d_q = (Complex64::i() * c + u * dc * (2.0 * u.im)) * b;
        j = Jacobian::from_columns(d_i, d_q) * j;
    }
    j
}

fn check_finite(s: &IqStream, stage: &'static str) -> Result<()> {
    match s.first_non_finite() {
        Some(index) => Err(Error::NonFinite { stage, index }),
        None => Ok(()),
    }
}

/// Runs a stream through the enabled stages.
pub fn rf_chain<R: Rng + ?Sized>(
    x: &IqStream,
    cfg: &ImpairmentConfig,
    rng: &mut R,
) -> Result<IqStream> {
    Ok(rf_chain_taps(x, cfg, rng)?.pa)
}

/// Per-stage outputs of one pass through the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTaps {
    pub digital: IqStream,
    pub dac: IqStream,
    pub mixer: IqStream,
    pub vco: IqStream,
    pub pa: IqStream,
}

impl ChainTaps {
    pub fn stage(&self, stage: Stage) -> &IqStream {
        match stage {
            Stage::Digital => &self.digital,
            Stage::Dac => &self.dac,
            Stage::Mixer => &self.mixer,
            Stage::Vco => &self.vco,
            Stage::Pa => &self.pa,
        }
    }
}

pub fn rf_chain_taps<R: Rng + ?Sized>(
    x: &IqStream,
    cfg: &ImpairmentConfig,
    rng: &mut R,
) -> Result<ChainTaps> {
    cfg.validate()?;
    check_finite(x, "input")?;
    let phases = draw_phases(x.len(), cfg, rng)?;
    let mut taps: [Vec<Complex64>; 5] = Default::default();
    for t in taps.iter_mut() {
        t.reserve(x.len());
    }
    for (&s, &ph) in x.samples.iter().zip(&phases) {
        for (tap, v) in taps.iter_mut().zip(apply_stages(s, cfg, ph)) {
            tap.push(v);
        }
    }
    let [digital, dac, mixer, vco, pa] = taps.map(|t| x.with_samples(t));
    check_finite(&dac, "dac")?;
    check_finite(&pa, "pa")?;
    Ok(ChainTaps {
        digital,
        dac,
        mixer,
        vco,
        pa,
    })
}
