//! Sweep results in long-format CSV and their self-contained SVG figure.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::report::mean_std;

/// One row of a sweep CSV: `model,level,seed,metric`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: String,
    pub level: f64,
    pub seed: u64,
    pub metric: f64,
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let err = |e: csv::Error| CliError::Failed(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_sweep_csv(path: &Path) -> CliResult<Vec<SweepRow>> {
    let err =
        |e: csv::Error| CliError::Usage(format!("cannot read sweep CSV {}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    r.deserialize().map(|row| row.map_err(err)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub level: f64,
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub model: String,
    /// Sorted by level.
    pub points: Vec<Point>,
}

/// Groups rows by model (first-appearance order) and level.
pub fn aggregate(rows: &[SweepRow]) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for r in rows {
        let idx = match series.iter().position(|s| s.model == r.model) {
            Some(i) => i,
            None => {
                series.push(Series {
                    model: r.model.clone(),
                    points: Vec::new(),
                });
                series.len() - 1
            }
        };
        let points = &mut series[idx].points;
        match points.iter_mut().find(|p| p.level == r.level) {
            Some(p) => p.values.push(r.metric),
            None => points.push(Point {
                level: r.level,
                values: vec![r.metric],
                mean: 0.0,
                std: 0.0,
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.level.total_cmp(&b.level));
        for p in &mut s.points {
            (p.mean, p.std) = mean_std(&p.values);
        }
    }
    series
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub rows: Vec<SweepRow>,
}

const PANEL_W: f64 = 440.0;
const PANEL_H: f64 = 330.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;

fn color(model: &str, i: usize) -> &'static str {
    match model {
        "qgat" => "#d62728",
        "gatv2" => "#1f77b4",
        "gat" => "#2ca02c",
        _ => ["#9467bd", "#8c564b", "#e377c2", "#7f7f7f"][i % 4],
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn span(lo: f64, hi: f64, pad: f64) -> (f64, f64) {
    if hi - lo <= 1e-12 || (hi - lo).is_nan() {
        return (lo - 0.05, hi + 0.05);
    }
    let p = (hi - lo) * pad;
    (lo - p, hi + p)
}

/// Side-by-side panels of mean ± std lines with error bars.
pub fn render_svg(panels: &[Panel]) -> String {
    let width = PANEL_W * panels.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" viewBox="0 0 {width} {PANEL_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, panel) in panels.iter().enumerate() {
        render_panel(&mut s, PANEL_W * k as f64, panel);
    }
    s.push_str("</svg>\n");
    s
}

fn render_panel(s: &mut String, x0: f64, panel: &Panel) {
    let series = aggregate(&panel.rows);
    let points = || series.iter().flat_map(|t| t.points.iter());
    let (xmin, xmax) = points().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(p.level), b.max(p.level))
    });
    let (ymin, ymax) = points().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(p.mean - p.std), b.max(p.mean + p.std))
    });
    let (xmin, xmax) = if xmin.is_finite() {
        span(xmin, xmax, 0.04)
    } else {
        (0.0, 1.0)
    };
    let (ymin, ymax) = if ymin.is_finite() {
        span(ymin, ymax, 0.08)
    } else {
        (0.0, 1.0)
    };
    let (pw, ph) = (PANEL_W - LEFT - RIGHT, PANEL_H - TOP - BOTTOM);
    let px = |x: f64| x0 + LEFT + (x - xmin) / (xmax - xmin) * pw;
    let py = |y: f64| TOP + (1.0 - (y - ymin) / (ymax - ymin)) * ph;

    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        x0 + LEFT + pw / 2.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{:.1}" y="{TOP}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#333"/>"##,
        x0 + LEFT
    );
    for i in 0..=4 {
        let y = ymin + (ymax - ymin) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<line x1="{a:.1}" x2="{b:.1}" y1="{v:.1}" y2="{v:.1}" stroke="#ddd"/><text x="{t:.1}" y="{u:.1}" text-anchor="end">{y:.3}</text>"##,
            a = x0 + LEFT,
            b = x0 + LEFT + pw,
            v = py(y),
            t = x0 + LEFT - 6.0,
            u = py(y) + 4.0
        );
    }
    if let Some(first) = series.first() {
        for p in &first.points {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                px(p.level),
                TOP + ph + 16.0,
                p.level
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        x0 + LEFT + pw / 2.0,
        PANEL_H - 12.0,
        escape(&panel.x_label)
    );
    let (ly, lx) = (TOP + ph / 2.0, x0 + 16.0);
    let _ = writeln!(
        s,
        r#"<text x="{lx:.1}" y="{ly:.1}" text-anchor="middle" transform="rotate(-90 {lx:.1} {ly:.1})">{}</text>"#,
        escape(&panel.y_label)
    );

    for (i, t) in series.iter().enumerate() {
        let c = color(&t.model, i);
        let path: Vec<String> = t
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.level), py(p.mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.8"/>"#,
            path.join(" ")
        );
        for p in &t.points {
            let (x, lo, hi) = (px(p.level), py(p.mean - p.std), py(p.mean + p.std));
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" x2="{x:.2}" y1="{lo:.2}" y2="{hi:.2}" stroke="{c}"/><line x1="{:.2}" x2="{:.2}" y1="{lo:.2}" y2="{lo:.2}" stroke="{c}"/><line x1="{:.2}" x2="{:.2}" y1="{hi:.2}" y2="{hi:.2}" stroke="{c}"/><circle cx="{x:.2}" cy="{:.2}" r="3" fill="{c}"/>"#,
                x - 4.0,
                x + 4.0,
                x - 4.0,
                x + 4.0,
                py(p.mean)
            );
        }
        let (lx, ly) = (x0 + LEFT + pw - 70.0, TOP + 14.0 + 16.0 * i as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" x2="{:.1}" y1="{ly:.1}" y2="{ly:.1}" stroke="{c}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            escape(&t.model)
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<SweepRow> {
        let mut out = Vec::new();
        for (m, base) in [("qgat", 0.9), ("gat", 0.8)] {
            for level in [0.0, 0.1] {
                for seed in 0..3 {
                    out.push(SweepRow {
                        model: m.into(),
                        level,
                        seed,
                        metric: base - level + 0.01 * seed as f64,
                    });
                }
            }
        }
        out
    }

    #[test]
    fn aggregate_groups_by_model_and_level() {
        let s = aggregate(&rows());
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].model, "qgat");
        assert_eq!(s[0].points.len(), 2);
        assert!((s[0].points[0].mean - 0.91).abs() < 1e-12);
        assert!((s[0].points[0].std - 0.01).abs() < 1e-12);
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let mut r = rows();
        r[0].metric = 0.1 + 0.2;
        write_sweep_csv(&path, &r).unwrap();
        assert_eq!(read_sweep_csv(&path).unwrap(), r);
        let header = std::fs::read_to_string(&path).unwrap();
        assert!(header.starts_with("model,level,seed,metric\n"));
    }

    #[test]
    fn svg_has_one_error_bar_per_point() {
        let panel = Panel {
            title: "Feature noise".into(),
            x_label: "ε".into(),
            y_label: "test accuracy".into(),
            rows: rows(),
        };
        let svg = render_svg(&[panel]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
