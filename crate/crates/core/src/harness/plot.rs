//! BER-vs-SNR line charts as standalone SVG.
//!
//! Output depends only on the records, so identical input gives
//! byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{DecoderTag, ScenarioKind};
use super::sweep::BerRecord;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

pub fn plot_file_name(scenario: ScenarioKind) -> String {
    format!("ber_{}.svg", scenario.tag())
}

/// Writes one SVG per scenario present in `records`.
pub fn emit_plots(records: &[BerRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::Missing("no BER records to plot".into()));
    }
    fs::create_dir_all(dir)?;
    let mut by_scenario: BTreeMap<ScenarioKind, Vec<&BerRecord>> = BTreeMap::new();
    for r in records {
        by_scenario.entry(r.scenario).or_default().push(r);
    }
    let mut paths = Vec::new();
    for (scenario, recs) in by_scenario {
        let path = dir.join(plot_file_name(scenario));
        fs::write(&path, render_svg(scenario, &recs)?)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Lowest decade shown. Zero-BER points are drawn on it.
fn floor_decade(recs: &[&BerRecord]) -> i32 {
    let lowest = recs
        .iter()
        .map(|r| {
            if r.ber > 0.0 {
                r.ber
            } else {
                0.5 / r.bits_total.max(1) as f64
            }
        })
        .fold(1.0, f64::min);
    (lowest.log10().floor() as i32).min(-1)
}

pub fn render_svg(scenario: ScenarioKind, recs: &[&BerRecord]) -> Result<String> {
    if recs.is_empty() {
        return Err(Error::Missing(format!("no BER records for {scenario}")));
    }
    let mut series: BTreeMap<DecoderTag, Vec<&BerRecord>> = BTreeMap::new();
    for r in recs {
        series.entry(r.decoder).or_default().push(r);
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    }
    let x_min = recs.iter().map(|r| r.snr_db).fold(f64::INFINITY, f64::min);
    let mut x_max = recs.iter().map(|r| r.snr_db).fold(f64::NEG_INFINITY, f64::max);
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    let floor = floor_decade(recs);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |ber: f64| {
        let l = if ber > 0.0 { ber.log10().max(floor as f64) } else { floor as f64 };
        TOP + (-l) / (-floor as f64) * plot_h
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">BER vs SNR ({scenario})</text>"#,
        LEFT + plot_w / 2.0
    );

    for d in floor..=0 {
        let y = py(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let mut xs: Vec<f64> = recs.iter().map(|r| r.snr_db).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for &x in &xs {
        let xp = px(x);
        let _ = writeln!(
            s,
            r##"<line x1="{xp:.1}" y1="{TOP:.1}" x2="{xp:.1}" y2="{:.1}" stroke="#eeeeee"/>"##,
            TOP + plot_h
        );
        let _ = writeln!(
            s,
            r#"<text x="{xp:.1}" y="{:.1}" text-anchor="middle">{x}</text>"#,
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.1}" y="{TOP:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">SNR (dB)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">BER</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut any_zero = false;
    for (k, (tag, pts)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|r| format!("{:.1},{:.1}", px(r.snr_db), py(r.ber)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.8" points="{}"/>"#,
            path.join(" ")
        );
        for r in pts {
            let fill = if r.ber > 0.0 { colour } else { "white" };
            any_zero |= r.ber == 0.0;
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{fill}" stroke="{colour}"/>"#,
                px(r.snr_db),
                py(r.ber)
            );
        }
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + plot_w + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#,
            lx + 22.0
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{tag}</text>"#, lx + 28.0, ly + 4.0);
    }
    if any_zero {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="11">open markers: no errors, drawn at 1e{floor}</text>"#,
            LEFT + 6.0,
            TOP + plot_h - 6.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equalize::DecoderKind;

    fn rec(scenario: ScenarioKind, decoder: DecoderTag, snr_db: f64, errs: u64) -> BerRecord {
        let bits = 60_000;
        BerRecord {
            scenario,
            decoder,
            snr_db,
            bit_errors: errs,
            bits_total: bits,
            ber: errs as f64 / bits as f64,
            ser: 0.0,
            ci_low: 0.0,
            ci_high: 1.0,
        }
    }

    fn records() -> Vec<BerRecord> {
        let mut v = Vec::new();
        for sc in ScenarioKind::ALL {
            for d in DecoderTag::ALL {
                for (k, snr) in [0.0, 10.0, 20.0].into_iter().enumerate() {
                    v.push(rec(sc, d, snr, [3000, 100, 0][k]));
                }
            }
        }
        v
    }

    #[test]
    fn one_file_per_scenario_with_all_series() {
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_plots(&records(), dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        for p in paths {
            let svg = fs::read_to_string(p).unwrap();
            assert_eq!(svg.matches("<polyline").count(), 6);
            assert!(svg.contains("open markers"));
        }
    }

    #[test]
    fn output_is_deterministic() {
        let recs = records();
        let refs: Vec<&BerRecord> = recs.iter().filter(|r| r.scenario == ScenarioKind::Clean).collect();
        let a = render_svg(ScenarioKind::Clean, &refs).unwrap();
        let mut rev = refs.clone();
        rev.reverse();
        assert_eq!(a, render_svg(ScenarioKind::Clean, &rev).unwrap());
    }

    #[test]
    fn zero_ber_sits_on_floor() {
        let r = [
            rec(ScenarioKind::Clean, DecoderTag::Classical(DecoderKind::Ml), 0.0, 600),
            rec(ScenarioKind::Clean, DecoderTag::Classical(DecoderKind::Ml), 2.0, 0),
        ];
        let refs: Vec<&BerRecord> = r.iter().collect();
        // half an error in 60000 bits lies in the 1e-6 decade
        assert_eq!(floor_decade(&refs), -6);
        let svg = render_svg(ScenarioKind::Clean, &refs).unwrap();
        let bottom = format!("cy=\"{:.1}\"", HEIGHT - BOTTOM);
        assert!(svg.contains(&bottom), "{svg}");
    }

    #[test]
    fn empty_input_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plots(&[], dir.path()).is_err());
    }
}
