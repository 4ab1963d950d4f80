//! Per-stage constellation dumps of random 16-QAM frames and two scatter
//! statistics computed on them.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::impair::{rf_chain_taps, ChainTaps, ImpairmentConfig, Stage};
use crate::modem::{build_qam, Constellation, SymbolIndex};
use crate::signal::IqStream;

pub const CSV_HEADER: &str = "stage,sample_index,i,q";

#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationDump {
    pub symbols: Vec<SymbolIndex>,
    pub taps: ChainTaps,
}

/// Passes `n` uniform 16-QAM symbols through `imp`, keeping every tap.
pub fn dump_constellations<R: Rng + ?Sized>(
    imp: &ImpairmentConfig,
    n: usize,
    rng: &mut R,
) -> Result<ConstellationDump> {
    if n == 0 {
        return Err(Error::InvalidConfig("constellation dump needs n >= 1".into()));
    }
    let qam = build_qam(16)?;
    let symbols: Vec<SymbolIndex> = (0..n).map(|_| SymbolIndex(rng.random_range(0..16))).collect();
    let x = IqStream::new(symbols.iter().map(|&s| qam.map(s)).collect(), imp.sample_rate_hz);
    let taps = rf_chain_taps(&x, imp, rng)?;
    Ok(ConstellationDump { symbols, taps })
}

pub fn stage_file_name(stage: Stage) -> String {
    format!("constellation_{}.csv", stage.name())
}

impl ConstellationDump {
    pub fn write_stage<W: Write>(&self, stage: Stage, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for (k, v) in self.taps.stage(stage).samples.iter().enumerate() {
            writeln!(w, "{},{k},{},{}", stage.name(), v.re, v.im)?;
        }
        Ok(())
    }

    /// Writes one CSV per stage into `dir` and returns the paths.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for stage in Stage::ALL {
            let path = dir.join(stage_file_name(stage));
            let mut buf = Vec::new();
            self.write_stage(stage, &mut buf)?;
            fs::write(&path, buf)?;
            paths.push(path);
        }
        Ok(paths)
    }

    pub fn stats(&self) -> Result<DumpStats> {
        let qam = build_qam(16)?;
        Ok(DumpStats {
            outer_compression: outer_ring_compression(&qam, &self.symbols, &self.taps.pa.samples)?,
            mixer_rotation_rad: iq_rotation(&self.taps.dac.samples, &self.taps.mixer.samples)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpStats {
    /// Amplitude gain on the outer corners divided by the gain on the inner
    /// ring; below 1 means the outer ring is compressed.
    pub outer_compression: f64,
    /// IQ phase error seen between the mixer input and output.
    pub mixer_rotation_rad: f64,
}

/// Ratio of mean `|y|/|x|` over the largest-modulus symbols to the same over
/// the smallest-modulus symbols.
pub fn outer_ring_compression(
    c: &Constellation,
    symbols: &[SymbolIndex],
    out: &[Complex64],
) -> Result<f64> {
    if symbols.len() != out.len() {
        return Err(Error::Dimension {
            expected: symbols.len(),
            got: out.len(),
        });
    }
    let radii: Vec<f64> = c.points().iter().map(|p| p.norm()).collect();
    let r_max = radii.iter().copied().fold(f64::MIN, f64::max);
    let r_min = radii.iter().copied().fold(f64::MAX, f64::min);
    let (mut outer, mut n_outer, mut inner, mut n_inner) = (0.0, 0usize, 0.0, 0usize);
    for (&s, y) in symbols.iter().zip(out) {
        let r = radii[s.0];
        if (r - r_max).abs() < 1e-12 {
            outer += y.norm() / r;
            n_outer += 1;
        } else if (r - r_min).abs() < 1e-12 {
            inner += y.norm() / r;
            n_inner += 1;
        }
    }
    if n_outer == 0 || n_inner == 0 {
        return Err(Error::InvalidConfig("dump has no outer or no inner symbols".into()));
    }
    Ok((outer / n_outer as f64) / (inner / n_inner as f64))
}

/// Estimates the IQ phase error from input/output pairs.
///
/// Fits `y = a x_I + b x_Q` by least squares. An imbalanced rotation maps
/// the I axis to `e^{j(theta + phi)}` and the Q axis to `j e^{j(phi - theta)}`,
/// so half the angle between `a` and `b / j` is theta with any common
/// rotation `phi` removed.
pub fn iq_rotation(x: &[Complex64], y: &[Complex64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    let (mut sii, mut sqq, mut siq) = (0.0, 0.0, 0.0);
    let (mut ri, mut rq) = (Complex64::default(), Complex64::default());
    for (p, v) in x.iter().zip(y) {
        sii += p.re * p.re;
        sqq += p.im * p.im;
        siq += p.re * p.im;
        ri += v * p.re;
        rq += v * p.im;
    }
    let det = sii * sqq - siq * siq;
    if !(det.abs() > 1e-12) {
        return Err(Error::InvalidConfig("rotation fit is singular".into()));
    }
    let a = (ri * sqq - rq * siq) / det;
    let b = (rq * sii - ri * siq) / det;
    let d = a / (b / Complex64::i());
    Ok(d.arg() / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impair::StageSwitches;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn disabled_chain_gives_identical_scatters() {
        let d = dump_constellations(&ImpairmentConfig::disabled(), 200, &mut rng()).unwrap();
        for s in Stage::ALL {
            assert_eq!(d.taps.stage(s).samples, d.taps.digital.samples);
        }
    }

    #[test]
    fn one_file_per_stage_with_n_rows() {
        let d = dump_constellations(&ImpairmentConfig::default(), 123, &mut rng()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = d.write_all(dir.path()).unwrap();
        assert_eq!(paths.len(), 5);
        for (p, stage) in paths.iter().zip(Stage::ALL) {
            let text = fs::read_to_string(p).unwrap();
            let mut lines = text.lines();
            assert_eq!(lines.next(), Some(CSV_HEADER));
            let rows: Vec<&str> = lines.collect();
            assert_eq!(rows.len(), 123);
            assert!(rows.iter().all(|r| r.starts_with(stage.name())));
        }
    }

    #[test]
    fn zero_symbols_rejected() {
        assert!(dump_constellations(&ImpairmentConfig::default(), 0, &mut rng()).is_err());
    }

    #[test]
    fn pa_compression_matches_am_am_ratio() {
        let imp = ImpairmentConfig {
            enabled: StageSwitches {
                dac: false,
                mixer: false,
                vco: false,
                pa: true,
            },
            ..ImpairmentConfig::default()
        };
        let d = dump_constellations(&imp, 4000, &mut rng()).unwrap();
        let qam = build_qam(16).unwrap();
        let scale = (10.0f64).sqrt().recip();
        let (r_o, r_i) = (18.0f64.sqrt() * scale, 2.0f64.sqrt() * scale);
        let b = imp.pa.input_scale;
        let gain = |r: f64| imp.pa.am_am(b * r) / r;
        let expected = gain(r_o) / gain(r_i);
        let got = outer_ring_compression(&qam, &d.symbols, &d.taps.pa.samples).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        assert!(got < 1.0);
    }

    #[test]
    fn rotation_estimator_recovers_phase_error() {
        for deg in [-5.0, -1.0, 2.5, 5.0] {
            let mut imp = ImpairmentConfig::default();
            imp.mixer.phase_error_deg = deg;
            imp.mixer.gain_imbalance_db = 0.7;
            let d = dump_constellations(&imp, 5000, &mut rng()).unwrap();
            let theta = d.stats().unwrap().mixer_rotation_rad.to_degrees();
            assert!((theta - deg).abs() < 0.1 * deg.abs(), "{theta} vs {deg}");
        }
    }

    #[test]
    fn rotation_estimator_is_exact_without_noise() {
        let x: Vec<Complex64> = build_qam(16).unwrap().points().to_vec();
        let th = 0.07;
        let y: Vec<Complex64> = x
            .iter()
            .map(|&v| crate::impair::iq_imbalance(v, 1.1, th) * Complex64::cis(0.4))
            .collect();
        assert!((iq_rotation(&x, &y).unwrap() - th).abs() < 1e-12);
    }
}
