//! JSON model checkpoints.
//!
//! Floats are written with shortest round-trip formatting so a reload is
//! bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::NetParams;
use super::nn::Mlp;
use super::train::{BestResponseConfig, History, TrainConfig};
use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::impair::ImpairmentConfig;

pub const FORMAT: &str = "simosec-checkpoint";
pub const VERSION: u32 = 1;

/// One trained system for one scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemCheckpoint {
    pub scenario: String,
    pub params: NetParams,
    pub train: TrainConfig,
    pub impairments: ImpairmentConfig,
    pub channel: ChannelConfig,
    pub history: History,
    /// Eavesdropper decoder retrained against the frozen encoder.
    pub best_response: Option<Mlp>,
    pub best_response_config: Option<BestResponseConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub systems: Vec<SystemCheckpoint>,
}

impl Checkpoint {
    pub fn new(systems: Vec<SystemCheckpoint>) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            systems,
        }
    }

    pub fn system(&self, scenario: &str) -> Option<&SystemCheckpoint> {
        self.systems.iter().find(|s| s.scenario == scenario)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != FORMAT {
            return Err(Error::Checkpoint(format!("unknown format {:?}", ck.format)));
        }
        if ck.version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        for s in &mut ck.systems {
            let p = &mut s.params;
            for net in [&mut p.encoder, &mut p.legit, &mut p.eve] {
                net.zero_grad();
            }
            if let Some(br) = s.best_response.as_mut() {
                br.zero_grad();
            }
            let enc = p.encoder.specs();
            if enc.first().map(|l| l.fan_in) != Some(p.order)
                || p.encoder.output_dim() != 2
                || p.legit.input_dim() != 4 * p.n_rx
                || p.legit.output_dim() != p.order
                || p.eve.specs() != p.legit.specs()
            {
                return Err(Error::Checkpoint(format!(
                    "inconsistent layer shapes for scenario {}",
                    s.scenario
                )));
            }
            if !p.is_finite() || p.norm_scale.is_none_or(|v| !v.is_finite()) {
                return Err(Error::Checkpoint(format!(
                    "non-finite or missing weights for scenario {}",
                    s.scenario
                )));
            }
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
