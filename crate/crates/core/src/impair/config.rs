use rand::Rng;
use serde::{Deserialize, Serialize};

use super::oscillator::cfo_bound;
use crate::error::{Error, Result};

/// Matched I/Q DAC polynomial, `rho[k-1]` multiplies the k-th power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DacConfig {
    pub rho: Vec<f64>,
}

impl Default for DacConfig {
    fn default() -> Self {
        Self {
            rho: vec![1.0, 0.0, -0.05],
        }
    }
}

impl DacConfig {
    pub fn identity() -> Self {
        Self { rho: vec![1.0] }
    }

    pub fn k_max(&self) -> usize {
        self.rho.len()
    }

    pub fn validate(&self) -> Result<()> {
        match self.rho.first() {
            None => Err(Error::InvalidConfig("dac.rho is empty".into())),
            Some(0.0) => Err(Error::InvalidConfig(
                "dac.rho[0] (first-order gain) must be non-zero".into(),
            )),
            _ if self.rho.iter().any(|r| !r.is_finite()) => {
                Err(Error::InvalidConfig("dac.rho has non-finite entries".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixerConfig {
    pub gain_imbalance_db: f64,
    pub phase_error_deg: f64,
    pub cfo_hz: f64,
    pub f_ppm: f64,
    pub f_c0_hz: f64,
    /// Wiener increment variance in rad^2 per sample.
    pub pn_variance_per_sample: f64,
}

impl Default for MixerConfig {
    fn default() -> Self {
        Self {
            gain_imbalance_db: 0.0,
            phase_error_deg: 0.0,
            cfo_hz: 1000.0,
            f_ppm: 10.0,
            f_c0_hz: 2.0e9,
            pn_variance_per_sample: 1e-4,
        }
    }
}

pub(crate) const GAIN_IMBALANCE_RANGE_DB: f64 = 1.0;
pub(crate) const PHASE_ERROR_RANGE_DEG: f64 = 5.0;

impl MixerConfig {
    pub fn identity() -> Self {
        Self {
            cfo_hz: 0.0,
            pn_variance_per_sample: 0.0,
            ..Self::default()
        }
    }

    pub fn gain(&self) -> f64 {
        super::db_to_amplitude(self.gain_imbalance_db)
    }

    pub fn phase_rad(&self) -> f64 {
        self.phase_error_deg.to_radians()
    }

    pub fn validate(&self) -> Result<()> {
        if self.gain_imbalance_db.abs() > GAIN_IMBALANCE_RANGE_DB {
            return Err(Error::InvalidConfig(format!(
                "mixer gain imbalance {} dB outside [-1, 1] dB",
                self.gain_imbalance_db
            )));
        }
        if self.phase_error_deg.abs() > PHASE_ERROR_RANGE_DEG {
            return Err(Error::InvalidConfig(format!(
                "mixer phase error {} deg outside [-5, 5] deg",
                self.phase_error_deg
            )));
        }
        if self.f_ppm < 0.0 || self.f_c0_hz < 0.0 {
            return Err(Error::InvalidConfig(
                "f_ppm and carrier frequency must be non-negative".into(),
            ));
        }
        let bound_hz = cfo_bound(self.f_ppm, self.f_c0_hz);
        if !(self.cfo_hz.abs() <= bound_hz) {
            return Err(Error::CfoOutOfBound {
                cfo_hz: self.cfo_hz,
                bound_hz,
            });
        }
        if !(self.pn_variance_per_sample >= 0.0) {
            return Err(Error::InvalidConfig(
                "mixer phase-noise variance must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcoConfig {
    pub gain_imbalance_db: f64,
    pub phase_error_deg: f64,
    /// Frequency sensitivity in Hz/V.
    pub k_vco: f64,
    pub v_vco: f64,
    pub f_vco0_hz: f64,
    pub pn_variance_per_sample: f64,
}

impl Default for VcoConfig {
    fn default() -> Self {
        Self {
            gain_imbalance_db: 0.0,
            phase_error_deg: 0.0,
            k_vco: 100.0,
            v_vco: 0.1,
            f_vco0_hz: 0.0,
            pn_variance_per_sample: 1e-4,
        }
    }
}

impl VcoConfig {
    pub fn identity() -> Self {
        Self {
            pn_variance_per_sample: 0.0,
            ..Self::default()
        }
    }

    pub fn gain(&self) -> f64 {
        super::db_to_amplitude(self.gain_imbalance_db)
    }

    pub fn phase_rad(&self) -> f64 {
        self.phase_error_deg.to_radians()
    }

    /// `K_vco * V_vco + f_vco0`. The carrier itself is not simulated.
    pub fn oscillation_hz(&self) -> f64 {
        self.k_vco * self.v_vco + self.f_vco0_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pn_variance_per_sample >= 0.0) {
            return Err(Error::InvalidConfig(
                "vco phase-noise variance must be >= 0".into(),
            ));
        }
        if !self.gain_imbalance_db.is_finite() || !self.phase_error_deg.is_finite() {
            return Err(Error::InvalidConfig("vco imbalance must be finite".into()));
        }
        Ok(())
    }
}

/// Saleh AM-AM / AM-PM parameters plus an input drive scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalehConfig {
    pub alpha_a: f64,
    pub beta_a: f64,
    pub alpha_p: f64,
    pub beta_p: f64,
    /// Input back-off: the PA sees `input_scale * x`.
    pub input_scale: f64,
}

impl Default for SalehConfig {
    fn default() -> Self {
        Self {
            alpha_a: 2.1587,
            beta_a: 1.1517,
            alpha_p: 4.0033,
            beta_p: 9.1040,
            input_scale: 1.0,
        }
    }
}

impl SalehConfig {
    pub fn am_am(&self, r: f64) -> f64 {
        self.alpha_a * r / (1.0 + self.beta_a * r * r)
    }

    pub fn am_pm(&self, r: f64) -> f64 {
        self.alpha_p * r * r / (1.0 + self.beta_p * r * r)
    }

    /// Input amplitude at which AM-AM peaks.
    pub fn saturation_amplitude(&self) -> f64 {
        self.beta_a.sqrt().recip()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_a > 0.0 && self.beta_a > 0.0 && self.beta_p > 0.0) {
            return Err(Error::InvalidConfig(
                "Saleh alpha_a, beta_a and beta_p must be > 0".into(),
            ));
        }
        if !(self.input_scale > 0.0) || !self.alpha_p.is_finite() {
            return Err(Error::InvalidConfig(
                "PA input scale must be > 0 and alpha_p finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSwitches {
    pub dac: bool,
    pub mixer: bool,
    pub vco: bool,
    pub pa: bool,
}

impl StageSwitches {
    pub const ALL: Self = Self {
        dac: true,
        mixer: true,
        vco: true,
        pa: true,
    };
    pub const NONE: Self = Self {
        dac: false,
        mixer: false,
        vco: false,
        pa: false,
    };

    pub fn any(&self) -> bool {
        self.dac || self.mixer || self.vco || self.pa
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentConfig {
    pub dac: DacConfig,
    pub mixer: MixerConfig,
    pub vco: VcoConfig,
    pub pa: SalehConfig,
    pub enabled: StageSwitches,
    pub sample_rate_hz: f64,
    /// Symbols between receiver phase re-synchronisations; CFO and phase
    /// noise restart at every frame boundary. 0 means one unbroken frame.
    pub frame_len: usize,
}

impl Default for ImpairmentConfig {
    fn default() -> Self {
        Self {
            dac: DacConfig::default(),
            mixer: MixerConfig::default(),
            vco: VcoConfig::default(),
            pa: SalehConfig::default(),
            enabled: StageSwitches::ALL,
            sample_rate_hz: 1.0e6,
            frame_len: 16,
        }
    }
}

impl ImpairmentConfig {
    /// All stages bypassed.
    pub fn disabled() -> Self {
        Self {
            enabled: StageSwitches::NONE,
            ..Self::default()
        }
    }

    /// Every stage on with parameters that make it an identity map.
    pub fn identity() -> Self {
        Self {
            dac: DacConfig::identity(),
            mixer: MixerConfig::identity(),
            vco: VcoConfig::identity(),
            ..Self::default()
        }
    }

    /// Draws one device's mixer and VCO gain/phase imbalances uniformly from
    /// +-1 dB and +-5 degrees.
    pub fn draw_imbalances<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let g = GAIN_IMBALANCE_RANGE_DB;
        let p = PHASE_ERROR_RANGE_DEG;
        self.mixer.gain_imbalance_db = rng.random_range(-g..=g);
        self.mixer.phase_error_deg = rng.random_range(-p..=p);
        self.vco.gain_imbalance_db = rng.random_range(-g..=g);
        self.vco.phase_error_deg = rng.random_range(-p..=p);
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidConfig("sample rate must be > 0".into()));
        }
        self.dac.validate()?;
        self.mixer.validate()?;
        self.vco.validate()?;
        self.pa.validate()
    }
}
