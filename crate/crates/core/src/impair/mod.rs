//! Transmitter RF impairment chain in complex baseband.
//!
//! Stage order is fixed: DAC polynomial, first up-conversion mixer (IQ
//! imbalance, CFO, phase noise), VCO second up-conversion (IQ imbalance,
//! phase noise) and the Saleh power amplifier. Deterministic carriers are
//! removed; only residual CFO and phase-noise rotations remain.
//!
//! Every stage is differentiable; [`chain_jacobian`] gives the 2x2 real
//! Jacobian of the whole chain for a frozen phase realisation so the
//! autoencoder can be trained through it.

mod chain;
mod config;
mod dac;
mod oscillator;
mod pa;

pub use chain::{
    apply_sample, apply_stages, chain_jacobian, draw_phases, rf_chain, rf_chain_taps, ChainTaps,
    Jacobian, SamplePhases, Stage,
};
pub use config::{DacConfig, ImpairmentConfig, MixerConfig, SalehConfig, StageSwitches, VcoConfig};
pub use dac::{dac_convert, dac_sample};
pub use oscillator::{
    cfo_bound, db_to_amplitude, iq_imbalance, mixer_upconvert, sample_phase_noise, vco_upconvert,
};
pub use pa::saleh_pa;
