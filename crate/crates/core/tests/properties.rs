use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use simosec::channel::{rayleigh_vector, transmit, NoiseConfig};
use simosec::equalize::{ml_decode, zf_equalize};
use simosec::harness::sweep::wilson_interval;
use simosec::harness::{seeds, ExperimentConfig};
use simosec::impair::{
    apply_stages, chain_jacobian, iq_imbalance, rf_chain, ImpairmentConfig, SalehConfig, SamplePhases, StageSwitches,
};
use simosec::{build_qam, IqStream, SymbolIndex};

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #[test]
    fn rotations_preserve_modulus(x in complex(), mixer in -10.0f64..10.0, vco in -10.0f64..10.0) {
        let imp = ImpairmentConfig {
            enabled: StageSwitches { dac: false, mixer: true, vco: true, pa: false },
            ..ImpairmentConfig::default()
        };
        let out = apply_stages(x, &imp, SamplePhases { mixer, vco });
        prop_assert!((out[2].norm() - x.norm()).abs() < 1e-12);
        prop_assert!((out[3].norm() - x.norm()).abs() < 1e-12);
    }

    #[test]
    fn disabled_chain_is_identity(xs in proptest::collection::vec(complex(), 1..64), seed: u64) {
        let s = IqStream::new(xs, 1e6);
        let out = rf_chain(&s, &ImpairmentConfig::disabled(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(out, s);
    }

    #[test]
    fn rotation_jacobian_is_orthogonal(x in complex(), mixer in -4.0f64..4.0) {
        let imp = ImpairmentConfig {
            enabled: StageSwitches { dac: false, mixer: true, vco: false, pa: false },
            ..ImpairmentConfig::identity()
        };
        let j = chain_jacobian(x, &imp, SamplePhases { mixer, vco: 0.0 });
        prop_assert!((j.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn balanced_iq_is_identity(x in complex()) {
        prop_assert!((iq_imbalance(x, 1.0, 0.0) - x).norm() < 1e-15);
    }

    #[test]
    fn iq_imbalance_is_linear_over_reals(x in complex(), y in complex(), a in -3.0f64..3.0, g in 0.8f64..1.25, th in -0.1f64..0.1) {
        let lhs = iq_imbalance(x * a + y, g, th);
        let rhs = iq_imbalance(x, g, th) * a + iq_imbalance(y, g, th);
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn saleh_output_bounded_by_peak(r in 0.0f64..50.0) {
        let pa = SalehConfig::default();
        let peak = pa.am_am(1.0 / pa.beta_a.sqrt());
        prop_assert!(pa.am_am(r) <= peak + 1e-12);
    }

    #[test]
    fn ml_matches_zf_decisions(seed: u64, snr_db in -5.0f64..30.0, s in 0usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qam = build_qam(16).unwrap();
        let h = rayleigh_vector(6, &mut rng);
        let y = transmit(qam.map(SymbolIndex(s)), &h, NoiseConfig { sigma2: 10f64.powf(-snr_db / 10.0) }, &mut rng);
        let zf = qam.demap_nearest(zf_equalize(&y, &h).unwrap()).unwrap();
        prop_assert_eq!(zf, ml_decode(&y, &h, &qam));
    }

    #[test]
    fn wilson_interval_brackets_estimate(n in 1u64..1_000_000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(k, n);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-15 && p <= hi + 1e-15 && hi <= 1.0);
    }

    #[test]
    fn config_render_round_trips(seed: u64, n_train in 1usize..100_000, cfo in 0.0f64..20_000.0, alpha in 0.0f64..=1.0) {
        let mut cfg = ExperimentConfig { master_seed: seed, n_train, ..ExperimentConfig::default() };
        cfg.impairments.mixer.cfo_hz = cfo;
        cfg.train.alpha = alpha;
        prop_assert_eq!(ExperimentConfig::parse(&cfg.render()).unwrap(), cfg);
    }

    #[test]
    fn derived_seeds_separate_parts(master: u64, a in "[a-z]{1,6}", b in "[a-z]{1,6}") {
        prop_assume!(a != b);
        prop_assert_ne!(seeds::derive(master, &[&a]), seeds::derive(master, &[&b]));
        let ab = format!("{a}{b}");
        prop_assert_ne!(seeds::derive(master, &[&a, &b]), seeds::derive(master, &[&ab]));
    }
}
