//! Trains the wiretap autoencoder for each configured scenario and packs the
//! results into one checkpoint.

use super::config::{ExperimentConfig, ScenarioKind};
use crate::autoenc::{eve_best_response, train, Checkpoint, SystemCheckpoint};
use crate::error::{Error, Result};
use crate::modem::SymbolIndex;

/// Joint training followed by the eavesdropper best response.
pub fn train_scenario(
    cfg: &ExperimentConfig,
    scenario: ScenarioKind,
    data: &[SymbolIndex],
) -> Result<SystemCheckpoint> {
    let imp = cfg.scenario_impairments(scenario);
    let tc = cfg.train_config(scenario);
    let (params, history) = train(data, &tc, &imp, &cfg.channel)?;
    let brc = cfg.best_response_config(scenario);
    let (br, _) = eve_best_response(&params, data, &brc, &imp, &cfg.channel)?;
    Ok(SystemCheckpoint {
        scenario: scenario.tag().into(),
        params,
        train: tc,
        impairments: imp,
        channel: cfg.channel.clone(),
        history,
        best_response: Some(br.eve),
        best_response_config: Some(brc),
    })
}

pub fn train_checkpoint(cfg: &ExperimentConfig, data: &[SymbolIndex]) -> Result<Checkpoint> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidConfig("empty training set".into()));
    }
    let systems = cfg
        .scenarios
        .iter()
        .map(|&s| train_scenario(cfg, s, data))
        .collect::<Result<Vec<_>>>()?;
    Ok(Checkpoint::new(systems))
}
