//! `simosec` command line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use simosec::autoenc::Checkpoint;
use simosec::harness::{
    dump_constellations, emit_plots, generate_dataset, read_csv, run_ber_sweep, seeds, train_checkpoint,
    write_csv, Dataset, ExperimentConfig, ScenarioKind,
};

const OUT_ENV: &str = "SIMOSEC_OUT_DIR";

#[derive(Parser)]
#[command(name = "simosec", version, about = "Secure SIMO link simulation with RF impairments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and save the train/test message dataset.
    GenData(Common),
    /// Train the autoencoder for every scenario and save a checkpoint.
    Train(Common),
    /// Run the BER sweep and write ber.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Model checkpoint; defaults to <out>/model.json.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Dump per-stage constellations through the impairment chain.
    Constellations {
        #[command(flatten)]
        common: Common,
        /// Number of random symbols; defaults to experiment.constellation_points.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value = "impaired")]
        scenario: ScenarioKind,
    },
    /// Render BER CSV results as SVG charts.
    Plot {
        #[command(flatten)]
        common: Common,
        /// BER CSV; defaults to <out>/ber.csv.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Print the effective configuration.
    Config(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides $SIMOSEC_OUT_DIR and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` overrides applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {kv:?}");
            };
            cfg.set(0, k.trim(), v.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        cfg.validate()?;
        let out = match (&self.out, std::env::var_os(OUT_ENV)) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) if !p.is_empty() => PathBuf::from(p),
            _ => cfg.output_dir.clone(),
        };
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok((cfg, out))
    }
}

/// Dataset saved by `gen-data` if it matches the config, else a fresh one.
fn dataset(cfg: &ExperimentConfig, out: &Path) -> Result<Dataset> {
    let fresh = generate_dataset(cfg);
    let path = out.join("dataset.json");
    if path.exists() {
        let saved = Dataset::load(&path)?;
        if saved == fresh {
            return Ok(saved);
        }
        eprintln!("note: {} does not match the config, regenerating", path.display());
    }
    Ok(fresh)
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::GenData(c) => {
            let (cfg, out) = c.load()?;
            let ds = generate_dataset(&cfg);
            let path = out.join("dataset.json");
            ds.save(&path)?;
            println!(
                "wrote {} ({} train, {} test, seed {:#x})",
                path.display(),
                ds.train.len(),
                ds.test.len(),
                ds.seed
            );
        }
        Command::Train(c) => {
            let (cfg, out) = c.load()?;
            let ds = dataset(&cfg, &out)?;
            let ck = train_checkpoint(&cfg, &ds.train_symbols())?;
            for s in &ck.systems {
                if let Some(last) = s.history.last() {
                    println!(
                        "{}: {} epochs, loss {:.4}, val BER legit {:.3e} eve {:.3e}",
                        s.scenario,
                        s.history.epochs.len(),
                        last.loss_total,
                        last.val_ber_legit,
                        last.val_ber_eve
                    );
                }
            }
            let path = out.join("model.json");
            ck.save(&path)?;
            println!("wrote {}", path.display());
        }
        Command::Sweep { common, checkpoint } => {
            let (cfg, out) = common.load()?;
            let ds = dataset(&cfg, &out)?;
            let ck = if cfg.decoders.iter().any(|d| d.is_learned()) {
                let path = checkpoint.unwrap_or_else(|| out.join("model.json"));
                Some(Checkpoint::load(&path).with_context(|| format!("loading checkpoint {}", path.display()))?)
            } else {
                None
            };
            let recs = run_ber_sweep(&cfg, &ds.test_symbols(), ck.as_ref())?;
            let path = out.join("ber.csv");
            let mut buf = Vec::new();
            write_csv(&mut buf, &recs)?;
            fs::write(&path, buf)?;
            println!("wrote {} ({} points)", path.display(), recs.len());
        }
        Command::Constellations { common, n, scenario } => {
            let (cfg, out) = common.load()?;
            let imp = cfg.scenario_impairments(scenario);
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(cfg.master_seed, &["constellations"]));
            let dump = dump_constellations(&imp, n.unwrap_or(cfg.constellation_points), &mut rng)?;
            for p in dump.write_all(&out)? {
                println!("wrote {}", p.display());
            }
            let st = dump.stats()?;
            println!("outer-ring compression after PA: {:.4}", st.outer_compression);
            println!(
                "mixer IQ rotation: {:.3} deg (configured {:.3} deg)",
                st.mixer_rotation_rad.to_degrees(),
                if imp.enabled.mixer { imp.mixer.phase_error_deg } else { 0.0 }
            );
        }
        Command::Plot { common, input } => {
            let (_, out) = common.load()?;
            let path = input.unwrap_or_else(|| out.join("ber.csv"));
            let f = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            let recs = read_csv(std::io::BufReader::new(f))?;
            for p in emit_plots(&recs, &out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Config(c) => {
            let (cfg, _) = c.load()?;
            print!("{}", cfg.render());
        }
    }
    Ok(())
}
