//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints one PASS/FAIL line; exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simosec::autoenc::{
    backward_batch, batch_loss, forward_batch, Architecture, Checkpoint, Mlp, NetParams, PowerNorm, Scenario,
    SnrDraw,
};
use simosec::channel::{rayleigh_vector, snr_to_sigma2, transmit_into, ChannelConfig, NoiseConfig};
use simosec::equalize::{ml_decode, rayleigh_mrc_ber, zf_equalize};
use simosec::harness::{
    dump_constellations, generate_dataset, run_ber_sweep, train_checkpoint, write_csv, BerRecord, DecoderTag,
    ExperimentConfig, ScenarioKind,
};
use simosec::impair::{cfo_bound, ImpairmentConfig, MixerConfig, SalehConfig};
use simosec::{build_qam, SymbolIndex};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn popcount_errors(a: SymbolIndex, b: SymbolIndex) -> u64 {
    (a.0 ^ b.0).count_ones() as u64
}

fn oracle_match() -> Outcome {
    let start = Instant::now();
    let qam = build_qam(16).unwrap();
    let n_rx = 6;
    let symbols = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut y = Vec::with_capacity(n_rx);
    let mut worst: f64 = 0.0;
    let mut checked = Vec::new();
    for snr_db in (0..=22).step_by(2).map(f64::from) {
        let oracle = rayleigh_mrc_ber(snr_db, 16, n_rx);
        if oracle < 1e-3 {
            continue;
        }
        let noise = NoiseConfig {
            sigma2: snr_to_sigma2(snr_db, 1.0),
        };
        let mut errors = 0u64;
        for _ in 0..symbols {
            let s = SymbolIndex(rng.random_range(0..16));
            let h = rayleigh_vector(n_rx, &mut rng);
            transmit_into(qam.map(s), &h, noise, &mut rng, &mut y);
            errors += popcount_errors(s, ml_decode(&y, &h, &qam));
        }
        let ber = errors as f64 / (4 * symbols) as f64;
        let rel = (ber - oracle).abs() / oracle;
        worst = worst.max(rel);
        checked.push(format!("{snr_db} dB {ber:.3e}/{oracle:.3e}"));
    }
    let t = start.elapsed();
    check(
        !checked.is_empty() && worst < 0.05 && t < Duration::from_secs(180),
        format!(
            "max relative error {:.2}% over {} points with 1e6 symbols each ({}), {:.1} s",
            100.0 * worst,
            checked.len(),
            checked.join(", "),
            t.as_secs_f64()
        ),
    )
}

fn ml_equals_zf() -> Outcome {
    let qam = build_qam(16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut y = Vec::new();
    let mut mismatches = 0;
    let trials = 100_000;
    for _ in 0..trials {
        let s = SymbolIndex(rng.random_range(0..16));
        let h = rayleigh_vector(6, &mut rng);
        let snr_db = rng.random_range(-5.0..25.0);
        let noise = NoiseConfig {
            sigma2: snr_to_sigma2(snr_db, 1.0),
        };
        transmit_into(qam.map(s), &h, noise, &mut rng, &mut y);
        let zf = qam.demap_nearest(zf_equalize(&y, &h).unwrap()).unwrap();
        if zf != ml_decode(&y, &h, &qam) {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{mismatches} mismatches in {trials} trials"))
}

fn impairment_identities() -> Outcome {
    let pa = SalehConfig::default();
    let am = pa.am_am(1.0);
    let pm = pa.am_pm(1.0);
    let d_am = (am - 2.1587 / 2.1517).abs();
    let d_pm = (pm - 4.0033 / 10.1040).abs();
    let bound = cfo_bound(10.0, 2.0e9);
    let table = MixerConfig::default();
    let valid = table.cfo_hz == 1000.0 && table.validate().is_ok();
    let too_big = MixerConfig {
        cfo_hz: 20_001.0,
        ..MixerConfig::default()
    };
    check(
        d_am <= 1e-12 && d_pm <= 1e-12 && bound == 20_000.0 && valid && too_big.validate().is_err(),
        format!(
            "AM-AM(1) = {am} (err {d_am:.1e}), AM-PM(1) = {pm} (err {d_pm:.1e}), CFO bound {bound} Hz, 1000 Hz valid: {valid}"
        ),
    )
}

fn net_mut(p: &mut NetParams, which: usize) -> &mut Mlp {
    match which {
        0 => &mut p.encoder,
        1 => &mut p.legit,
        _ => &mut p.eve,
    }
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut p = NetParams::new(16, 6, 1.0, &Architecture::default(), &mut rng).unwrap();
    let imp = ImpairmentConfig::default();
    let ch = ChannelConfig::default();
    let scen = Scenario {
        impairments: &imp,
        channel: &ch,
        snr: SnrDraw::Uniform(0.0, 18.0),
    };
    let msgs: Vec<SymbolIndex> = (0..64).map(|i| SymbolIndex(i % 16)).collect();
    let alpha = 0.5;
    let draw_seed = 405;
    let loss = |p: &NetParams| {
        let c = forward_batch(&msgs, &scen, &mut ChaCha8Rng::seed_from_u64(draw_seed), p, PowerNorm::Batch).unwrap();
        batch_loss(&c, &msgs, alpha).total
    };
    p.zero_grad();
    let c = forward_batch(&msgs, &scen, &mut ChaCha8Rng::seed_from_u64(draw_seed), &p, PowerNorm::Batch).unwrap();
    backward_batch(&c, &msgs, alpha, &mut p).unwrap();
    let eps = 1e-5;
    let n_params = 80;
    let mut worst: f64 = 0.0;
    for _ in 0..n_params {
        let which = rng.random_range(0..3);
        let m = net_mut(&mut p, which);
        let layer = rng.random_range(0..m.layers.len());
        let bias = rng.random_bool(0.3);
        let count = if bias {
            m.layers[layer].bias.len()
        } else {
            m.layers[layer].weight.len()
        };
        let idx = rng.random_range(0..count);
        let analytic = m.grad(layer, bias, idx);
        let orig = *m.param_mut(layer, bias, idx);
        *net_mut(&mut p, which).param_mut(layer, bias, idx) = orig + eps;
        let up = loss(&p);
        *net_mut(&mut p, which).param_mut(layer, bias, idx) = orig - eps;
        let down = loss(&p);
        *net_mut(&mut p, which).param_mut(layer, bias, idx) = orig;
        let fd = (up - down) / (2.0 * eps);
        let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-7);
        worst = worst.max(rel);
    }
    let t = start.elapsed();
    check(
        worst < 1e-3 && t < Duration::from_secs(60),
        format!(
            "max relative error {worst:.2e} over {n_params} parameters, all stages on, {:.1} s",
            t.as_secs_f64()
        ),
    )
}

struct Trained {
    cfg: ExperimentConfig,
    checkpoint: Checkpoint,
    records: Vec<BerRecord>,
    train_time: Duration,
}

fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = ExperimentConfig::default();
        let ds = generate_dataset(&cfg);
        let start = Instant::now();
        let checkpoint = train_checkpoint(&cfg, &ds.train_symbols()).expect("training succeeds");
        let train_time = start.elapsed();
        let checkpoint = Checkpoint::from_json(&checkpoint.to_json().unwrap()).unwrap();
        let records = run_ber_sweep(&cfg, &ds.test_symbols(), Some(&checkpoint)).expect("sweep succeeds");
        Trained {
            cfg,
            checkpoint,
            records,
            train_time,
        }
    })
}

fn series(recs: &[BerRecord], s: ScenarioKind, d: DecoderTag) -> Vec<&BerRecord> {
    let mut v: Vec<&BerRecord> = recs.iter().filter(|r| r.scenario == s && r.decoder == d).collect();
    v.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    v
}

fn security_property() -> Outcome {
    let t = trained();
    let mut ok = t.train_time < Duration::from_secs(30 * 60);
    let mut lines = vec![format!("training {:.0} s", t.train_time.as_secs_f64())];
    for s in ScenarioKind::ALL {
        let legit = series(&t.records, s, DecoderTag::AeLegit);
        let eve = series(&t.records, s, DecoderTag::AeEve);
        let br = series(&t.records, s, DecoderTag::AeEveBestResponse);

        // (a) at most one inversion, smaller than twice the CI width
        let mut inversions = 0;
        let mut a_ok = true;
        for w in legit.windows(2) {
            let rise = w[1].ber - w[0].ber;
            if rise > 0.0 {
                inversions += 1;
                let width = (w[0].ci_high - w[0].ci_low).max(w[1].ci_high - w[1].ci_low);
                a_ok &= rise < 2.0 * width;
            }
        }
        a_ok &= inversions <= 1;

        // (b)
        let bound = match s {
            ScenarioKind::Clean => 1e-2,
            ScenarioKind::Impaired => 5e-2,
        };
        let at18 = legit.iter().find(|r| r.snr_db == 18.0).map(|r| r.ber).unwrap_or(f64::NAN);
        let b_ok = at18 < bound;

        // (c)
        let eve_min = eve.iter().map(|r| r.ber).fold(f64::INFINITY, f64::min);
        let c_ok = eve_min >= 0.4;

        // (d)
        let d_ok = legit.len() == br.len()
            && legit.iter().zip(&br).all(|(l, b)| l.snr_db == b.snr_db && b.ber > l.ber);
        let min_gap = legit
            .iter()
            .zip(&br)
            .map(|(l, b)| b.ber - l.ber)
            .fold(f64::INFINITY, f64::min);

        ok &= a_ok && b_ok && c_ok && d_ok;
        lines.push(format!(
            "{s}: (a) {} with {inversions} inversions; (b) {} legit BER at 18 dB {at18:.3e} < {bound:.0e}; (c) {} min eve BER {eve_min:.3}; (d) {} min best-response gap {min_gap:.3e}",
            pf(a_ok),
            pf(b_ok),
            pf(c_ok),
            pf(d_ok),
        ));
    }
    check(ok, lines.join("\n    "))
}

fn constellation_statistics() -> Outcome {
    let mut imp = ImpairmentConfig::default();
    imp.mixer.phase_error_deg = 5.0;
    let n = ExperimentConfig::default().constellation_points;
    let dump = dump_constellations(&imp, n, &mut ChaCha8Rng::seed_from_u64(606)).unwrap();
    let st = dump.stats().unwrap();
    let qam = build_qam(16).unwrap();
    let before_pa =
        simosec::harness::constellations::outer_ring_compression(&qam, &dump.symbols, &dump.taps.vco.samples).unwrap();
    let theta = st.mixer_rotation_rad.to_degrees();
    check(
        st.outer_compression < 1.0 && st.outer_compression < before_pa && (theta - 5.0).abs() < 0.5,
        format!(
            "post-PA outer/inner gain ratio {:.4} (post-VCO {before_pa:.4}); post-mixer rotation {theta:.3} deg vs 5 deg; {n} symbols",
            st.outer_compression
        ),
    )
}

fn sweep_determinism() -> Outcome {
    let t = trained();
    let ds = generate_dataset(&t.cfg);
    let render = |cfg: &ExperimentConfig| {
        let recs = run_ber_sweep(cfg, &ds.test_symbols(), Some(&t.checkpoint)).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        buf
    };
    let first = {
        let mut buf = Vec::new();
        write_csv(&mut buf, &t.records).unwrap();
        buf
    };
    let second = render(&t.cfg);
    let parallel = render(&ExperimentConfig {
        workers: 2,
        ..t.cfg.clone()
    });
    check(
        first == second && first == parallel,
        format!(
            "{} bytes, {} records; repeat identical: {}; 2 workers identical: {}",
            first.len(),
            t.records.len(),
            first == second,
            first == parallel
        ),
    )
}

fn training_trend() -> String {
    let t = trained();
    t.checkpoint
        .systems
        .iter()
        .map(|s| {
            let h = &s.history;
            format!(
                "{}: loss {:.4} -> {:.4}, non-increasing epochs {:.0}%",
                s.scenario,
                h.epochs.first().map(|e| e.loss_total).unwrap_or(f64::NAN),
                h.last().map(|e| e.loss_total).unwrap_or(f64::NAN),
                100.0 * h.non_increasing_fraction()
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 analytic oracle match", oracle_match),
        ("2 ML equals ZF", ml_equals_zf),
        ("3 impairment identities", impairment_identities),
        ("4 gradient check", gradient_check),
        ("5 security property", security_property),
        ("6 constellation statistics", constellation_statistics),
        ("7 sweep determinism", sweep_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if filter.is_empty() || filter.iter().any(|p| "5 security property".contains(p.as_str())) {
        println!("info training trend: {}", training_trend());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
