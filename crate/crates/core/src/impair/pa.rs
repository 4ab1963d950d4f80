use num_complex::Complex64;

use super::SalehConfig;
use crate::signal::IqStream;

/// Complex Saleh gain `C(s)` with `s = |x|^2`, so that the PA output is
/// `x * C(|x|^2)`. Smooth at the origin, where AM-PM is taken as 0.
#[inline]
pub(crate) fn saleh_gain(cfg: &SalehConfig, s: f64) -> Complex64 {
    let amp = cfg.alpha_a / (1.0 + cfg.beta_a * s);
    let phase = cfg.alpha_p * s / (1.0 + cfg.beta_p * s);
    Complex64::from_polar(amp, phase)
}

/// `dC/ds`.
#[inline]
pub(crate) fn saleh_gain_slope(cfg: &SalehConfig, s: f64, c: Complex64) -> Complex64 {
    let da = -cfg.beta_a / (1.0 + cfg.beta_a * s);
    let dp = cfg.alpha_p / (1.0 + cfg.beta_p * s).powi(2);
    c * Complex64::new(da, dp)
}

#[inline]
pub(crate) fn saleh_sample(x: Complex64, cfg: &SalehConfig) -> Complex64 {
    let x = x * cfg.input_scale;
    x * saleh_gain(cfg, x.norm_sqr())
}

/// Memoryless AM-AM / AM-PM distortion.
pub fn saleh_pa(x: &IqStream, cfg: &SalehConfig) -> IqStream {
    x.with_samples(x.samples.iter().map(|&s| saleh_sample(s, cfg)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_zero() {
        let y = saleh_pa(&IqStream::new(vec![Complex64::new(0.0, 0.0)], 1e6), &SalehConfig::default());
        assert_eq!(y.samples[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn unit_amplitude_response() {
        let cfg = SalehConfig::default();
        let y = saleh_sample(Complex64::new(1.0, 0.0), &cfg);
        assert!((y.norm() - 2.1587 / 2.1517).abs() < 1e-12);
        assert!((y.arg() - 4.0033 / 10.1040).abs() < 1e-12);
        // same numbers through the scalar curves
        assert!((cfg.am_am(1.0) - 1.003_253_241_622_903).abs() < 1e-12);
        assert!((cfg.am_pm(1.0) - 0.396_209_422_011_084_8).abs() < 1e-12);
    }

    #[test]
    fn phase_advance_is_added_to_input_phase() {
        let cfg = SalehConfig::default();
        let x = Complex64::from_polar(0.6, -2.0);
        let y = saleh_sample(x, &cfg);
        assert!((y.norm() - cfg.am_am(0.6)).abs() < 1e-12);
        let d = (y * x.conj()).arg();
        assert!((d - cfg.am_pm(0.6)).abs() < 1e-12);
    }

    #[test]
    fn am_am_peak_by_grid_search() {
        let cfg = SalehConfig::default();
        let n = 10_000;
        let (mut best_r, mut best_a) = (0.0, 0.0);
        let mut prev = -1.0;
        let peak = cfg.saturation_amplitude();
        for i in 0..=n {
            let r = 3.0 * i as f64 / n as f64;
            let a = cfg.am_am(r);
            if r < peak - 1e-3 {
                assert!(a > prev);
            } else if r > peak + 1e-3 {
                assert!(a < prev);
            }
            prev = a;
            if a > best_a {
                best_a = a;
                best_r = r;
            }
        }
        assert!((peak - 0.931_816_328_8).abs() < 1e-9);
        assert!((best_r - peak).abs() < 3e-4);
        let a_max = cfg.alpha_a / (2.0 * cfg.beta_a.sqrt());
        assert!((a_max - 1.005_755_954_5).abs() < 1e-9);
        assert!((best_a - a_max).abs() < 1e-6);
    }
}
