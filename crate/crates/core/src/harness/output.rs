//! `trace.csv`, `summary.json` and `curve.svg`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::run::{Experiment, Summary};
use crate::error::{Error, Result};
use crate::eval::{mean, std_dev};

pub const TRACE_HEADER: &str = "run_id,seed,impressions,ndcg10";
pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CURVE_FILE: &str = "curve.svg";

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub run_id: usize,
    pub seed: u64,
    pub impressions: u64,
    pub ndcg10: f64,
}

pub fn trace_csv(experiment: &Experiment) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for run in &experiment.runs {
        for &(impressions, ndcg) in &run.trace.checkpoints {
            writeln!(out, "{},{},{impressions},{ndcg}", run.run_id, run.seed).unwrap();
        }
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {TRACE_HEADER:?}"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let err = || Error::Parse {
                line: i + 1,
                message: format!("malformed trace row {line:?}"),
            };
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 4 {
                return Err(err());
            }
            Ok(TraceRow {
                run_id: f[0].parse().map_err(|_| err())?,
                seed: f[1].parse().map_err(|_| err())?,
                impressions: f[2].parse().map_err(|_| err())?,
                ndcg10: f[3].parse().map_err(|_| err())?,
            })
        })
        .collect()
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text)
}

/// Mean and sample standard deviation of NDCG@10 at one checkpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub impressions: u64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

pub fn curve_from_trace(rows: &[TraceRow]) -> Vec<CurvePoint> {
    let mut by_checkpoint: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_checkpoint.entry(r.impressions).or_default().push(r.ndcg10);
    }
    by_checkpoint
        .into_iter()
        .map(|(impressions, v)| CurvePoint {
            impressions,
            mean: mean(&v),
            std: std_dev(&v),
        })
        .collect()
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Learning curves of mean NDCG@10 against impressions (log axis) with a
/// shaded band of one standard deviation. Every checkpoint is also emitted
/// as a marker carrying its exact mean and std in data attributes.
pub fn curve_svg(series: &[Series]) -> String {
    let (w, h) = (760.0, 440.0);
    let (left, right, top, bottom) = (64.0, 180.0, 36.0, 52.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let all = series.iter().flat_map(|s| &s.points);
    let max_x = all.clone().map(|p| p.impressions).max().unwrap_or(1).max(1);
    let lo = all.clone().map(|p| p.mean - p.std).fold(f64::INFINITY, f64::min);
    let hi = all.map(|p| p.mean + p.std).fold(f64::NEG_INFINITY, f64::max);
    let (y0, y1) = if lo.is_finite() && hi > lo {
        (((lo - 0.02) * 20.0).floor() / 20.0, ((hi + 0.02) * 20.0).ceil() / 20.0)
    } else {
        (0.0, 1.0)
    };
    let (y0, y1) = (y0.max(0.0), y1.min(1.0).max(y0.max(0.0) + 0.05));
    let x_of = |x: u64| left + pw * ((1.0 + x as f64).log10() / (1.0 + max_x as f64).log10());
    let y_of = |y: f64| top + ph * (1.0 - (y - y0) / (y1 - y0));

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">Held-out NDCG@10</text>"#, left + pw / 2.0).unwrap();

    // axes and ticks
    writeln!(s, r##"<g stroke="#444" fill="none"><line x1="{left}" y1="{}" x2="{}" y2="{}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{}"/></g>"##, top + ph, left + pw, top + ph, top + ph).unwrap();
    let mut tick = 1u64;
    while tick <= max_x {
        let x = x_of(tick);
        writeln!(s, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#444"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##, top + ph, top + ph + 5.0, top + ph + 18.0, format_count(tick)).unwrap();
        tick = match tick.checked_mul(10) {
            Some(t) => t,
            None => break,
        };
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">impressions</text>"#, left + pw / 2.0, h - 12.0).unwrap();
    let steps = ((y1 - y0) / 0.05).round() as usize;
    let stride = steps.div_ceil(10).max(1);
    for i in (0..=steps).step_by(stride) {
        let v = y0 + 0.05 * i as f64;
        let y = y_of(v);
        writeln!(s, r##"<line x1="{}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="#444"/><line x1="{left}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#eee"/><text x="{}" y="{:.2}" text-anchor="end">{v:.2}</text>"##, left - 5.0, left + pw, left - 8.0, y + 4.0).unwrap();
    }

    for (i, series) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts = &series.points;
        let mut band = String::new();
        for p in pts {
            write!(band, "{:.2},{:.2} ", x_of(p.impressions), y_of((p.mean + p.std).min(y1))).unwrap();
        }
        for p in pts.iter().rev() {
            write!(band, "{:.2},{:.2} ", x_of(p.impressions), y_of((p.mean - p.std).max(y0))).unwrap();
        }
        writeln!(s, r#"<g class="series" data-label="{}">"#, escape(&series.label)).unwrap();
        writeln!(s, r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.trim_end()).unwrap();
        let line: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.2},{:.2}", x_of(p.impressions), y_of(p.mean)))
            .collect();
        writeln!(s, r#"<polyline class="mean" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" ")).unwrap();
        for p in pts {
            writeln!(s, r#"<circle class="checkpoint" cx="{:.2}" cy="{:.2}" r="2" fill="{color}" data-impressions="{}" data-mean="{}" data-std="{}"/>"#, x_of(p.impressions), y_of(p.mean), p.impressions, p.mean, p.std).unwrap();
        }
        let ly = top + 10.0 + 20.0 * i as f64;
        writeln!(s, r#"<rect x="{}" y="{}" width="14" height="4" fill="{color}"/><text x="{}" y="{}">{}</text>"#, left + pw + 16.0, ly - 4.0, left + pw + 36.0, ly + 1.0, escape(&series.label)).unwrap();
        writeln!(s, "</g>").unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn format_count(n: u64) -> String {
    match n {
        n if n >= 1_000_000 && n % 1_000_000 == 0 => format!("{}M", n / 1_000_000),
        n if n >= 1_000 && n % 1_000 == 0 => format!("{}k", n / 1_000),
        n => n.to_string(),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputFiles {
    pub trace: PathBuf,
    pub summary: PathBuf,
    pub curve: PathBuf,
}

/// Writes `trace.csv`, `summary.json` and `curve.svg` into `out_dir`,
/// creating it if needed.
pub fn emit_outputs(experiment: &Experiment, out_dir: &Path) -> Result<OutputFiles> {
    if experiment.runs.is_empty() {
        return Err(Error::InvalidArgument("no runs to write".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv = trace_csv(experiment);
    let trace = write(out_dir.join(TRACE_FILE), &csv)?;
    let summary = write(
        out_dir.join(SUMMARY_FILE),
        &serde_json::to_string_pretty(&experiment.summary)?,
    )?;
    let series = Series {
        label: experiment.summary.label.clone(),
        points: curve_from_trace(&parse_trace(&csv)?),
    };
    let curve = write(out_dir.join(CURVE_FILE), &curve_svg(&[series]))?;
    Ok(OutputFiles {
        trace,
        summary,
        curve,
    })
}

/// Rebuilds a plot from the `trace.csv` files of one or more output
/// directories. Series are labelled from `summary.json` when present.
pub fn plot_dirs(dirs: &[PathBuf], out: &Path) -> Result<()> {
    let series = dirs
        .iter()
        .map(|dir| {
            let rows = read_trace(&dir.join(TRACE_FILE))?;
            let label = Summary::load(&dir.join(SUMMARY_FILE))
                .map(|s| s.label)
                .unwrap_or_else(|_| dir.display().to_string());
            Ok(Series {
                label,
                points: curve_from_trace(&rows),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write(out.to_path_buf(), &curve_svg(&series)).map(drop)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_parsing_rejects_garbage() {
        assert!(parse_trace("a,b\n").is_err());
        assert!(parse_trace(&format!("{TRACE_HEADER}\n1,2,3\n")).is_err());
        let rows = parse_trace(&format!("{TRACE_HEADER}\n0,7,10,0.5\n1,8,10,0.25\n")).unwrap();
        let curve = curve_from_trace(&rows);
        assert_eq!(curve.len(), 1);
        assert_eq!(curve[0].mean, 0.375);
        assert!((curve[0].std - (0.03125f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let svg = curve_svg(&[Series {
            label: "a<b".into(),
            points: vec![
                CurvePoint { impressions: 0, mean: 0.3, std: 0.01 },
                CurvePoint { impressions: 1000, mean: 0.6, std: 0.05 },
            ],
        }]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("class=\"checkpoint\"").count(), 2);
        assert!(svg.contains(">1k<"));
    }
}
