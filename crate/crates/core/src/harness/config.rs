//! Experiment configuration and its flat `key = value` file format.
//!
//! One assignment per line, `#` starts a comment, keys are dotted
//! (`pa.alpha_a = 2.1587`). Lists are comma separated. Unknown keys are an
//! error so typos do not silently fall back to defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autoenc::{Architecture, BestResponseConfig, TrainConfig};
use crate::channel::ChannelConfig;
use crate::equalize::DecoderKind;
use crate::error::{Error, Result};
use crate::impair::ImpairmentConfig;

/// Scenario tag as written in result files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioKind {
    Clean,
    Impaired,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 2] = [ScenarioKind::Clean, ScenarioKind::Impaired];

    pub fn tag(self) -> &'static str {
        match self {
            ScenarioKind::Clean => "clean",
            ScenarioKind::Impaired => "impaired",
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "clean" => Ok(ScenarioKind::Clean),
            "impaired" => Ok(ScenarioKind::Impaired),
            other => Err(Error::InvalidConfig(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Receiver evaluated in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DecoderTag {
    Classical(DecoderKind),
    AeLegit,
    /// Eavesdropper decoder trained jointly under the designer's loss.
    AeEve,
    /// Eavesdropper decoder retrained against the frozen encoder.
    AeEveBestResponse,
}

impl DecoderTag {
    pub const ALL: [DecoderTag; 6] = [
        DecoderTag::Classical(DecoderKind::Zf),
        DecoderTag::Classical(DecoderKind::Lmmse),
        DecoderTag::Classical(DecoderKind::Ml),
        DecoderTag::AeLegit,
        DecoderTag::AeEve,
        DecoderTag::AeEveBestResponse,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            DecoderTag::Classical(k) => k.tag(),
            DecoderTag::AeLegit => "AE-legit",
            DecoderTag::AeEve => "AE-eve",
            DecoderTag::AeEveBestResponse => "AE-eve-br",
        }
    }

    pub fn is_learned(self) -> bool {
        !matches!(self, DecoderTag::Classical(_))
    }
}

impl std::fmt::Display for DecoderTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DecoderTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        DecoderTag::ALL
            .into_iter()
            .find(|d| d.tag() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown decoder {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub order: usize,
    pub test_snr_grid_db: Vec<f64>,
    pub scenarios: Vec<ScenarioKind>,
    pub decoders: Vec<DecoderTag>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Keep sending symbols until this many bit errors are seen...
    pub min_bit_errors: u64,
    /// ...or this many symbols have been sent.
    pub max_symbols: u64,
    pub workers: usize,
    pub constellation_points: usize,
    pub channel: ChannelConfig,
    /// Impairment parameters for the `impaired` scenario.
    pub impairments: ImpairmentConfig,
    /// Replace the mixer/VCO imbalances with a seeded draw from the
    /// +-1 dB / +-5 degree ranges.
    pub draw_imbalances: bool,
    pub train: TrainConfig,
    pub best_response: BestResponseConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_train: 35_000,
            n_test: 15_000,
            order: 16,
            test_snr_grid_db: (0..=11).map(|k| 2.0 * k as f64).collect(),
            scenarios: ScenarioKind::ALL.to_vec(),
            decoders: DecoderTag::ALL.to_vec(),
            master_seed: 2024,
            output_dir: PathBuf::from("out"),
            min_bit_errors: 100,
            max_symbols: 200_000,
            workers: 1,
            constellation_points: 2000,
            channel: ChannelConfig::default(),
            impairments: ImpairmentConfig::default(),
            draw_imbalances: true,
            train: TrainConfig::default(),
            best_response: BestResponseConfig::default(),
        }
    }
}

fn parse_num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::ConfigParse {
        line,
        msg: format!("bad value {v:?} for {key}"),
    })
}

fn parse_list<T: FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|p| parse_num(line, key, p)).collect()
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::ConfigParse {
            line,
            msg: format!("bad boolean {v:?} for {key}"),
        }),
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigParse {
                line,
                msg: format!("expected `key = value`, got {content:?}"),
            })?;
            cfg.set(line, key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies one assignment; `line` is only used in error messages.
    pub fn set(&mut self, line: usize, key: &str, v: &str) -> Result<()> {
        let imp = &mut self.impairments;
        let tr = &mut self.train;
        match key {
            "experiment.n_train" => self.n_train = parse_num(line, key, v)?,
            "experiment.n_test" => self.n_test = parse_num(line, key, v)?,
            "experiment.order" => {
                self.order = parse_num(line, key, v)?;
                tr.order = self.order;
            }
            "experiment.test_snr_grid_db" => self.test_snr_grid_db = parse_list(line, key, v)?,
            "experiment.scenarios" => self.scenarios = parse_list(line, key, v)?,
            "experiment.decoders" => self.decoders = parse_list(line, key, v)?,
            "experiment.master_seed" => self.master_seed = parse_num(line, key, v)?,
            "experiment.output_dir" => self.output_dir = PathBuf::from(v),
            "experiment.min_bit_errors" => self.min_bit_errors = parse_num(line, key, v)?,
            "experiment.max_symbols" => self.max_symbols = parse_num(line, key, v)?,
            "experiment.workers" => self.workers = parse_num(line, key, v)?,
            "experiment.constellation_points" => self.constellation_points = parse_num(line, key, v)?,
            "channel.n_rx" => self.channel.n_rx = parse_num(line, key, v)?,
            "channel.n_paths" => self.channel.n_paths = parse_num(line, key, v)?,
            "channel.spacing_ratio" => self.channel.spacing_ratio = parse_num(line, key, v)?,
            "impair.sample_rate_hz" => imp.sample_rate_hz = parse_num(line, key, v)?,
            "impair.frame_len" => imp.frame_len = parse_num(line, key, v)?,
            "impair.draw_imbalances" => self.draw_imbalances = parse_bool(line, key, v)?,
            "impair.dac" => imp.enabled.dac = parse_bool(line, key, v)?,
            "impair.mixer" => imp.enabled.mixer = parse_bool(line, key, v)?,
            "impair.vco" => imp.enabled.vco = parse_bool(line, key, v)?,
            "impair.pa" => imp.enabled.pa = parse_bool(line, key, v)?,
            "dac.rho" => imp.dac.rho = parse_list(line, key, v)?,
            "mixer.gain_imbalance_db" => imp.mixer.gain_imbalance_db = parse_num(line, key, v)?,
            "mixer.phase_error_deg" => imp.mixer.phase_error_deg = parse_num(line, key, v)?,
            "mixer.cfo_hz" => imp.mixer.cfo_hz = parse_num(line, key, v)?,
            "mixer.f_ppm" => imp.mixer.f_ppm = parse_num(line, key, v)?,
            "mixer.f_c0_hz" => imp.mixer.f_c0_hz = parse_num(line, key, v)?,
            "mixer.pn_variance" => imp.mixer.pn_variance_per_sample = parse_num(line, key, v)?,
            "vco.gain_imbalance_db" => imp.vco.gain_imbalance_db = parse_num(line, key, v)?,
            "vco.phase_error_deg" => imp.vco.phase_error_deg = parse_num(line, key, v)?,
            "vco.k_vco" => imp.vco.k_vco = parse_num(line, key, v)?,
            "vco.v_vco" => imp.vco.v_vco = parse_num(line, key, v)?,
            "vco.f_vco0_hz" => imp.vco.f_vco0_hz = parse_num(line, key, v)?,
            "vco.pn_variance" => imp.vco.pn_variance_per_sample = parse_num(line, key, v)?,
            "pa.alpha_a" => imp.pa.alpha_a = parse_num(line, key, v)?,
            "pa.beta_a" => imp.pa.beta_a = parse_num(line, key, v)?,
            "pa.alpha_p" => imp.pa.alpha_p = parse_num(line, key, v)?,
            "pa.beta_p" => imp.pa.beta_p = parse_num(line, key, v)?,
            "pa.input_scale" => imp.pa.input_scale = parse_num(line, key, v)?,
            "train.alpha" => tr.alpha = parse_num(line, key, v)?,
            "train.batch_size" => tr.batch_size = parse_num(line, key, v)?,
            "train.epochs" => tr.epochs = parse_num(line, key, v)?,
            "train.lr0" => tr.lr0 = parse_num(line, key, v)?,
            "train.lr_decay" => tr.lr_decay = parse_num(line, key, v)?,
            "train.patience" => tr.patience = parse_num(line, key, v)?,
            "train.snr_min_db" => tr.snr_train_range_db.0 = parse_num(line, key, v)?,
            "train.snr_max_db" => tr.snr_train_range_db.1 = parse_num(line, key, v)?,
            "train.power_limit" => tr.power_limit = parse_num(line, key, v)?,
            "train.val_snr_db" => tr.val_snr_db = parse_num(line, key, v)?,
            "train.val_symbols" => tr.val_symbols = parse_num(line, key, v)?,
            "train.fixed_realizations" => tr.fixed_realizations = parse_bool(line, key, v)?,
            "train.encoder_hidden" => tr.architecture.encoder_hidden = parse_list(line, key, v)?,
            "train.decoder_hidden" => tr.architecture.decoder_hidden = parse_list(line, key, v)?,
            "eve_br.epochs" => self.best_response.epochs = parse_num(line, key, v)?,
            "eve_br.batch_size" => self.best_response.batch_size = parse_num(line, key, v)?,
            "eve_br.lr" => self.best_response.lr = parse_num(line, key, v)?,
            _ => {
                return Err(Error::ConfigParse {
                    line,
                    msg: format!("unknown key {key:?}"),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.n_train == 0 || self.n_test == 0 {
            return bad("n_train and n_test must be positive");
        }
        if self.test_snr_grid_db.is_empty() || self.test_snr_grid_db.iter().any(|s| !s.is_finite()) {
            return bad("test SNR grid must be non-empty and finite");
        }
        if self.scenarios.is_empty() || self.decoders.is_empty() {
            return bad("need at least one scenario and one decoder");
        }
        if self.workers == 0 || self.max_symbols == 0 {
            return bad("workers and max_symbols must be positive");
        }
        if self.train.order != self.order {
            return bad("train order differs from experiment order");
        }
        self.channel.validate()?;
        self.impairments.validate()?;
        self.train.validate()
    }

    /// Impairment configuration used for a scenario; imbalance draws are
    /// seeded from the master seed so every verb sees the same device.
    pub fn scenario_impairments(&self, s: ScenarioKind) -> ImpairmentConfig {
        match s {
            ScenarioKind::Clean => ImpairmentConfig {
                enabled: crate::impair::StageSwitches::NONE,
                ..self.impairments.clone()
            },
            ScenarioKind::Impaired => {
                let mut imp = self.impairments.clone();
                if self.draw_imbalances {
                    let mut rng = ChaCha8Rng::seed_from_u64(super::seeds::derive(self.master_seed, &["device"]));
                    imp.draw_imbalances(&mut rng);
                }
                imp
            }
        }
    }

    pub fn train_config(&self, s: ScenarioKind) -> TrainConfig {
        TrainConfig {
            seed: super::seeds::derive(self.master_seed, &["train", s.tag()]),
            ..self.train.clone()
        }
    }

    pub fn best_response_config(&self, s: ScenarioKind) -> BestResponseConfig {
        BestResponseConfig {
            seed: super::seeds::derive(self.master_seed, &["eve-br", s.tag()]),
            snr_train_range_db: self.train.snr_train_range_db,
            ..self.best_response.clone()
        }
    }

    /// Renders every key; `parse(render())` returns an equal config.
    pub fn render(&self) -> String {
        let imp = &self.impairments;
        let tr = &self.train;
        let Architecture {
            encoder_hidden,
            decoder_hidden,
        } = &tr.architecture;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("experiment.n_train", self.n_train.to_string());
        kv("experiment.n_test", self.n_test.to_string());
        kv("experiment.order", self.order.to_string());
        kv("experiment.test_snr_grid_db", join(&self.test_snr_grid_db));
        kv("experiment.scenarios", join(&self.scenarios));
        kv("experiment.decoders", join(&self.decoders));
        kv("experiment.master_seed", self.master_seed.to_string());
        kv("experiment.output_dir", self.output_dir.display().to_string());
        kv("experiment.min_bit_errors", self.min_bit_errors.to_string());
        kv("experiment.max_symbols", self.max_symbols.to_string());
        kv("experiment.workers", self.workers.to_string());
        kv("experiment.constellation_points", self.constellation_points.to_string());
        kv("channel.n_rx", self.channel.n_rx.to_string());
        kv("channel.n_paths", self.channel.n_paths.to_string());
        kv("channel.spacing_ratio", self.channel.spacing_ratio.to_string());
        kv("impair.sample_rate_hz", imp.sample_rate_hz.to_string());
        kv("impair.frame_len", imp.frame_len.to_string());
        kv("impair.draw_imbalances", self.draw_imbalances.to_string());
        kv("impair.dac", imp.enabled.dac.to_string());
        kv("impair.mixer", imp.enabled.mixer.to_string());
        kv("impair.vco", imp.enabled.vco.to_string());
        kv("impair.pa", imp.enabled.pa.to_string());
        kv("dac.rho", join(&imp.dac.rho));
        kv("mixer.gain_imbalance_db", imp.mixer.gain_imbalance_db.to_string());
        kv("mixer.phase_error_deg", imp.mixer.phase_error_deg.to_string());
        kv("mixer.cfo_hz", imp.mixer.cfo_hz.to_string());
        kv("mixer.f_ppm", imp.mixer.f_ppm.to_string());
        kv("mixer.f_c0_hz", imp.mixer.f_c0_hz.to_string());
        kv("mixer.pn_variance", imp.mixer.pn_variance_per_sample.to_string());
        kv("vco.gain_imbalance_db", imp.vco.gain_imbalance_db.to_string());
        kv("vco.phase_error_deg", imp.vco.phase_error_deg.to_string());
        kv("vco.k_vco", imp.vco.k_vco.to_string());
        kv("vco.v_vco", imp.vco.v_vco.to_string());
        kv("vco.f_vco0_hz", imp.vco.f_vco0_hz.to_string());
        kv("vco.pn_variance", imp.vco.pn_variance_per_sample.to_string());
        kv("pa.alpha_a", imp.pa.alpha_a.to_string());
        kv("pa.beta_a", imp.pa.beta_a.to_string());
        kv("pa.alpha_p", imp.pa.alpha_p.to_string());
        kv("pa.beta_p", imp.pa.beta_p.to_string());
        kv("pa.input_scale", imp.pa.input_scale.to_string());
        kv("train.alpha", tr.alpha.to_string());
        kv("train.batch_size", tr.batch_size.to_string());
        kv("train.epochs", tr.epochs.to_string());
        kv("train.lr0", tr.lr0.to_string());
        kv("train.lr_decay", tr.lr_decay.to_string());
        kv("train.patience", tr.patience.to_string());
        kv("train.snr_min_db", tr.snr_train_range_db.0.to_string());
        kv("train.snr_max_db", tr.snr_train_range_db.1.to_string());
        kv("train.power_limit", tr.power_limit.to_string());
        kv("train.val_snr_db", tr.val_snr_db.to_string());
        kv("train.val_symbols", tr.val_symbols.to_string());
        kv("train.fixed_realizations", tr.fixed_realizations.to_string());
        kv("train.encoder_hidden", join(encoder_hidden));
        kv("train.decoder_hidden", join(decoder_hidden));
        kv("eve_br.epochs", self.best_response.epochs.to_string());
        kv("eve_br.batch_size", self.best_response.batch_size.to_string());
        kv("eve_br.lr", self.best_response.lr.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_simulation_table() {
        let c = ExperimentConfig::default();
        assert_eq!(c.n_train, 35_000);
        assert_eq!(c.n_test, 15_000);
        assert_eq!(c.n_train + c.n_test, 50_000);
        assert_eq!(c.train.batch_size, 256);
        assert_eq!(c.train.lr0, 0.0003);
        assert_eq!(c.train.lr_decay, 0.65);
        assert_eq!(c.train.epochs, 100);
        assert_eq!(c.train.snr_train_range_db, (0.0, 18.0));
        assert_eq!(c.channel.n_rx, 6);
        assert_eq!(c.impairments.sample_rate_hz, 1e6);
        assert_eq!(c.impairments.mixer.f_c0_hz, 2e9);
        assert_eq!(c.impairments.mixer.cfo_hz, 1000.0);
        assert_eq!(c.impairments.mixer.f_ppm, 10.0);
        assert_eq!((c.impairments.vco.k_vco, c.impairments.vco.v_vco), (100.0, 0.1));
        let pa = &c.impairments.pa;
        assert_eq!((pa.alpha_a, pa.beta_a, pa.alpha_p, pa.beta_p), (2.1587, 1.1517, 4.0033, 9.1040));
        assert_eq!(c.test_snr_grid_db.first(), Some(&0.0));
        assert_eq!(c.test_snr_grid_db.last(), Some(&22.0));
        assert_eq!(c.test_snr_grid_db.len(), 12);
    }

    #[test]
    fn render_parse_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&c.render()).unwrap(), c);
    }

    #[test]
    fn parses_overrides_and_comments() {
        let text = "# comment\n\npa.alpha_a = 2.0  # trailing\nexperiment.decoders = ML, AE-legit\nexperiment.test_snr_grid_db = 0,10\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.impairments.pa.alpha_a, 2.0);
        assert_eq!(c.decoders, vec![DecoderTag::Classical(DecoderKind::Ml), DecoderTag::AeLegit]);
        assert_eq!(c.test_snr_grid_db, vec![0.0, 10.0]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            ExperimentConfig::parse("pa.alpha = 1"),
            Err(Error::ConfigParse { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("\nchannel.n_rx = six"),
            Err(Error::ConfigParse { line: 2, .. })
        ));
        assert!(ExperimentConfig::parse("no equals sign").is_err());
        assert!(ExperimentConfig::parse("mixer.cfo_hz = 30000").is_err());
    }

    #[test]
    fn tags_round_trip() {
        for d in DecoderTag::ALL {
            assert_eq!(d.tag().parse::<DecoderTag>().unwrap(), d);
        }
        for s in ScenarioKind::ALL {
            assert_eq!(s.tag().parse::<ScenarioKind>().unwrap(), s);
        }
    }

    #[test]
    fn clean_scenario_disables_everything() {
        let c = ExperimentConfig::default();
        assert!(!c.scenario_impairments(ScenarioKind::Clean).enabled.any());
        let a = c.scenario_impairments(ScenarioKind::Impaired);
        let b = c.scenario_impairments(ScenarioKind::Impaired);
        assert_eq!(a, b);
        assert!(a.mixer.gain_imbalance_db.abs() <= 1.0 && a.mixer.phase_error_deg.abs() <= 5.0);
    }
}
