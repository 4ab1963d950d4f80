//! Secure SIMO physical-layer simulation.
//!
//! A transmitter RF impairment chain, geometric multipath channels to a
//! legitimate receiver and an eavesdropper, classical ZF/LMMSE/ML
//! receivers, and an autoencoder trained so that the legitimate link
//! decodes reliably while the eavesdropper's decoder output stays close to
//! uniform.

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autoenc;
pub mod channel;
pub mod equalize;
pub mod harness;
mod error;
pub mod impair;
pub mod link;
pub mod modem;
pub mod signal;

pub use error::{Error, Result};
pub use modem::{build_qam, Constellation, SymbolIndex};
pub use signal::IqStream;
