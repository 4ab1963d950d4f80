//! BER sweeps over scenario x decoder x SNR and their CSV form.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{DecoderTag, ExperimentConfig, ScenarioKind};
use super::seeds;
use crate::autoenc::Checkpoint;
use crate::error::{Error, Result};
use crate::link::{Detector, ErrorCounts, LinkModel};
use crate::modem::{build_qam, SymbolIndex};

pub const CSV_HEADER: &str = "scenario,decoder,snr_db,bit_errors,bits_total,ber,ser,ci_low,ci_high";

#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub scenario: ScenarioKind,
    pub decoder: DecoderTag,
    pub snr_db: f64,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
    pub ser: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BerRecord {
    pub fn from_counts(scenario: ScenarioKind, decoder: DecoderTag, snr_db: f64, c: &ErrorCounts) -> Self {
        let (ci_low, ci_high) = wilson_interval(c.bit_errors, c.bits);
        Self {
            scenario,
            decoder,
            snr_db,
            bit_errors: c.bit_errors,
            bits_total: c.bits,
            ber: c.ber(),
            ser: c.ser(),
            ci_low,
            ci_high,
        }
    }

    fn sort_key(&self, other: &Self) -> Ordering {
        self.scenario
            .cmp(&other.scenario)
            .then(self.decoder.cmp(&other.decoder))
            .then(self.snr_db.total_cmp(&other.snr_db))
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.decoder,
            self.snr_db,
            self.bit_errors,
            self.bits_total,
            self.ber,
            self.ser,
            self.ci_low,
            self.ci_high
        )
    }
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

pub fn sort_records(records: &mut [BerRecord]) {
    records.sort_by(|a, b| a.sort_key(b));
}

/// Writes header and rows with `\n` line endings.
pub fn write_csv<W: Write>(mut w: W, records: &[BerRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<BerRecord>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != CSV_HEADER {
        return Err(Error::ConfigParse {
            line: 1,
            msg: format!("unexpected CSV header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::ConfigParse {
            line: i + 2,
            msg: format!("bad {what} in {line:?}"),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad("field count"));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad("number"));
        let int = |k: usize| f[k].parse::<u64>().map_err(|_| bad("count"));
        out.push(BerRecord {
            scenario: f[0].parse()?,
            decoder: f[1].parse()?,
            snr_db: num(2)?,
            bit_errors: int(3)?,
            bits_total: int(4)?,
            ber: num(5)?,
            ser: num(6)?,
            ci_low: num(7)?,
            ci_high: num(8)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct Job {
    scenario: ScenarioKind,
    decoder: DecoderTag,
    snr_db: f64,
}

fn job_seed(master: u64, job: &Job) -> u64 {
    seeds::derive(
        master,
        &["sweep", job.scenario.tag(), job.decoder.tag(), &job.snr_db.to_string()],
    )
}

/// Runs every configured point. `test` is the test split of the dataset;
/// a checkpoint is needed iff a learned decoder is requested.
pub fn run_ber_sweep(
    cfg: &ExperimentConfig,
    test: &[SymbolIndex],
    checkpoint: Option<&Checkpoint>,
) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    if test.is_empty() {
        return Err(Error::InvalidConfig("empty test set".into()));
    }
    if cfg.decoders.iter().any(|d| d.is_learned()) {
        let ck = checkpoint.ok_or_else(|| Error::Missing("learned decoders need a model checkpoint".into()))?;
        for s in &cfg.scenarios {
            let sys = ck
                .system(s.tag())
                .ok_or_else(|| Error::Missing(format!("checkpoint has no {s} system")))?;
            if cfg.decoders.contains(&DecoderTag::AeEveBestResponse) && sys.best_response.is_none() {
                return Err(Error::Missing(format!("checkpoint has no best-response eavesdropper for {s}")));
            }
        }
    }
    let jobs: Vec<Job> = cfg
        .scenarios
        .iter()
        .flat_map(|&scenario| {
            cfg.decoders.iter().flat_map(move |&decoder| {
                cfg.test_snr_grid_db.iter().map(move |&snr_db| Job {
                    scenario,
                    decoder,
                    snr_db,
                })
            })
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let mut records = pool.install(|| {
        jobs.par_iter()
            .map(|job| run_point(cfg, test, checkpoint, job))
            .collect::<Result<Vec<_>>>()
    })?;
    sort_records(&mut records);
    Ok(records)
}

fn run_point(
    cfg: &ExperimentConfig,
    test: &[SymbolIndex],
    checkpoint: Option<&Checkpoint>,
    job: &Job,
) -> Result<BerRecord> {
    let imp = cfg.scenario_impairments(job.scenario);
    let link = LinkModel {
        impairments: &imp,
        channel: &cfg.channel,
        snr_db: job.snr_db,
        es: 1.0,
    };
    let qam = build_qam(cfg.order)?;
    let sys = checkpoint.and_then(|c| c.system(job.scenario.tag()));
    let points = sys.map(|s| s.params.constellation());
    let detector = match job.decoder {
        DecoderTag::Classical(kind) => Detector::Classical {
            kind,
            constellation: &qam,
        },
        learned => {
            let sys = sys.ok_or_else(|| Error::Missing(format!("no trained system for {}", job.scenario)))?;
            let decoder = match learned {
                DecoderTag::AeLegit => &sys.params.legit,
                DecoderTag::AeEve => &sys.params.eve,
                _ => sys
                    .best_response
                    .as_ref()
                    .ok_or_else(|| Error::Missing("best-response decoder".into()))?,
            };
            Detector::Learned {
                points: points.as_deref().expect("points exist with a system"),
                decoder,
            }
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(job_seed(cfg.master_seed, job));
    let mut counts = link.run_block(test, &detector, &mut rng)?;
    let mut block = Vec::with_capacity(test.len());
    while counts.bit_errors < cfg.min_bit_errors && counts.symbols < cfg.max_symbols {
        block.clear();
        block.extend((0..test.len()).map(|_| SymbolIndex(rng.random_range(0..cfg.order))));
        counts.add(link.run_block(&block, &detector, &mut rng)?);
    }
    let rec = BerRecord::from_counts(job.scenario, job.decoder, job.snr_db, &counts);
    if !rec.ber.is_finite() {
        return Err(Error::NonFinite {
            stage: "ber",
            index: 0,
        });
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equalize::DecoderKind;

    #[test]
    fn wilson_reference_values() {
        // k = 10, n = 100: (0.05523, 0.17437) to 4 decimals
        let (lo, hi) = wilson_interval(10, 100);
        assert!((lo - 0.0552).abs() < 1e-4 && (hi - 0.1744).abs() < 1e-4, "{lo} {hi}");
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.004);
    }

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            n_test: 500,
            test_snr_grid_db: vec![0.0, 10.0, 20.0],
            decoders: vec![
                DecoderTag::Classical(DecoderKind::Ml),
                DecoderTag::Classical(DecoderKind::Zf),
            ],
            min_bit_errors: 20,
            max_symbols: 5000,
            ..ExperimentConfig::default()
        }
    }

    fn test_set(n: usize) -> Vec<SymbolIndex> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        (0..n).map(|_| SymbolIndex(rng.random_range(0..16))).collect()
    }

    #[test]
    fn records_are_consistent_and_sorted() {
        let cfg = small_cfg();
        let recs = run_ber_sweep(&cfg, &test_set(500), None).unwrap();
        assert_eq!(recs.len(), 2 * 2 * 3);
        for w in recs.windows(2) {
            assert_ne!(w[0].sort_key(&w[1]), Ordering::Greater);
        }
        for r in &recs {
            assert_eq!(r.ber, r.bit_errors as f64 / r.bits_total as f64);
            assert!((0.0..=1.0).contains(&r.ber));
            assert!(r.ci_low <= r.ber && r.ber <= r.ci_high);
            assert_eq!(r.bits_total % (500 * 4), 0);
            assert!(r.bit_errors >= 20 || r.bits_total >= 5000 * 4);
        }
    }

    #[test]
    fn learned_decoders_need_a_checkpoint() {
        let cfg = ExperimentConfig {
            decoders: vec![DecoderTag::AeLegit],
            ..small_cfg()
        };
        assert!(matches!(run_ber_sweep(&cfg, &test_set(10), None), Err(Error::Missing(_))));
    }

    #[test]
    fn csv_round_trip_and_format() {
        let cfg = ExperimentConfig {
            scenarios: vec![ScenarioKind::Clean],
            ..small_cfg()
        };
        let recs = run_ber_sweep(&cfg, &test_set(500), None).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
        assert!(!text.contains('\r'));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let one = run_ber_sweep(&small_cfg(), &test_set(500), None).unwrap();
        let two = run_ber_sweep(
            &ExperimentConfig {
                workers: 2,
                ..small_cfg()
            },
            &test_set(500),
            None,
        )
        .unwrap();
        assert_eq!(one, two);
    }
}
