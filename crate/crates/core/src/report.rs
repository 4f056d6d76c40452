//! Result files: CSV tables, JSON selection records and SVG plots.
//!
//! Everything renders to a `String` so the caller decides where and when to
//! write. Each file starts with the configuration hash and seed (a `#`
//! comment for CSV, an XML comment for SVG, top-level fields for JSON).
//! Floats use Rust's shortest round-trip formatting, so identical inputs give
//! identical bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiments::{DesignRecord, OptimizeRecord, RankMap, SensitivityRow};
use crate::ghrtf::{GhrtfDatabase, SurfacePoint};
use crate::music::MusicTrialStats;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStamp {
    pub config_hash: String,
    pub seed: u64,
}

impl RunStamp {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        RunStamp {
            config_hash: config_hash.into(),
            seed,
        }
    }

    fn line(&self) -> String {
        format!("config_hash={} seed={}", self.config_hash, self.seed)
    }
}

/// A CSV document with a stamp comment and a header row.
pub fn csv_table(stamp: &RunStamp, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let body = w.into_inner().map_err(|e| e.into_error())?;
    Ok(format!("# {}\n{}", stamp.line(), String::from_utf8_lossy(&body)))
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn rank_map_csv(db: &GhrtfDatabase, map: &RankMap, stamp: &RunStamp) -> Result<String> {
    let rows: Vec<Vec<String>> = db
        .candidates()
        .positions()
        .iter()
        .zip(&map.values)
        .enumerate()
        .map(|(m, (p, &r))| {
            let [x, y, z] = p.cartesian();
            vec![m.to_string(), num(x), num(y), num(z), num(r)]
        })
        .collect();
    csv_table(stamp, &["candidate_index", "x", "y", "z", "effective_rank"], &rows)
}

pub fn trace_csv(records: &[OptimizeRecord], stamp: &RunStamp) -> Result<String> {
    let rows: Vec<Vec<String>> = records
        .iter()
        .flat_map(|r| {
            r.trace.iter().enumerate().map(move |(g, &f)| {
                vec![r.size.to_string(), r.realization.to_string(), g.to_string(), num(f)]
            })
        })
        .collect();
    csv_table(stamp, &["L", "realization", "generation", "best_fitness"], &rows)
}

pub fn sensitivity_csv(rows: &[SensitivityRow], stamp: &RunStamp) -> Result<String> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.frequency_hz),
                r.num_mics.to_string(),
                r.variant_a.to_string(),
                r.variant_b.to_string(),
                num(r.mean_a),
                num(r.mean_b),
                num(r.ratio_db),
            ]
        })
        .collect();
    csv_table(
        stamp,
        &["frequency_hz", "L", "variant_a", "variant_b", "mean_sensitivity_a", "mean_sensitivity_b", "ratio_db"],
        &rows,
    )
}

pub fn music_csv(stats: &[MusicTrialStats], stamp: &RunStamp) -> Result<String> {
    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| {
            vec![
                num(s.frequency_hz),
                s.num_mics.to_string(),
                num(s.snr_db),
                s.array_type.clone(),
                num(s.std_degrees),
                s.trial_count.to_string(),
                s.seed.to_string(),
            ]
        })
        .collect();
    csv_table(
        stamp,
        &["frequency_hz", "L", "snr_db", "array_type", "std_degrees", "trial_count", "seed"],
        &rows,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    #[serde(rename = "L")]
    pub size: usize,
    pub indices: Vec<usize>,
    pub positions: Vec<SurfacePoint>,
    pub effective_rank: f64,
    pub generations: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub array_type: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub realization: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFile {
    pub config_hash: String,
    pub seed: u64,
    pub selections: Vec<SelectionRecord>,
}

fn positions(db: &GhrtfDatabase, indices: &[usize]) -> Vec<SurfacePoint> {
    indices
        .iter()
        .map(|&i| db.candidates().positions()[i])
        .collect()
}

pub fn optimize_json(db: &GhrtfDatabase, records: &[OptimizeRecord], stamp: &RunStamp) -> Result<String> {
    let selections = records
        .iter()
        .map(|r| SelectionRecord {
            size: r.size,
            positions: positions(db, &r.selection.indices),
            indices: r.selection.indices.clone(),
            effective_rank: r.selection.effective_rank,
            generations: r.generations,
            seed: r.seed,
            array_type: None,
            realization: Some(r.realization),
        })
        .collect();
    selection_file(stamp, selections)
}

pub fn designs_json(db: &GhrtfDatabase, records: &[DesignRecord], stamp: &RunStamp) -> Result<String> {
    let selections = records
        .iter()
        .map(|r| SelectionRecord {
            size: r.size,
            positions: positions(db, &r.indices),
            indices: r.indices.clone(),
            effective_rank: r.effective_rank,
            generations: r.generations,
            seed: r.seed,
            array_type: Some(r.array_type.to_string()),
            realization: Some(r.realization),
        })
        .collect();
    selection_file(stamp, selections)
}

fn selection_file(stamp: &RunStamp, selections: Vec<SelectionRecord>) -> Result<String> {
    let file = SelectionFile {
        config_hash: stamp.config_hash.clone(),
        seed: stamp.seed,
        selections,
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Frame {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            f = Frame { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        }
        if f.x1 - f.x0 < 1e-12 {
            f.x0 -= 0.5;
            f.x1 += 0.5;
        }
        if f.y1 - f.y0 < 1e-12 {
            f.y0 -= 0.5;
            f.y1 += 0.5;
        }
        f
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open(out: &mut String, stamp: &RunStamp, title: &str, frame: &Frame, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<!-- {} -->
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        stamp.line(),
        WIDTH / 2.0,
        escape(title)
    );
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>
<text x="{l}" y="{}" text-anchor="middle">{}</text>
<text x="{r}" y="{}" text-anchor="middle">{}</text>
<text x="{}" y="{b}" text-anchor="end">{}</text>
<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 18.0,
        escape(x_label),
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label),
        b + 16.0,
        tick(frame.x0),
        b + 16.0,
        tick(frame.x1),
        l - 6.0,
        tick(frame.y0),
        l - 6.0,
        t + 4.0,
        tick(frame.y1),
    );
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Line plot with one polyline and legend entry per series.
pub fn line_plot_svg(title: &str, x_label: &str, y_label: &str, series: &[Series], stamp: &RunStamp) -> String {
    let frame = Frame::fit(series.iter().flat_map(|s| s.points.iter().copied()));
    let mut out = String::new();
    svg_open(&mut out, stamp, title, &frame, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        let ly = MARGIN + 14.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{ly:.2}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter of `(x, y, value)` with a blue-to-red color scale on `value`.
pub fn scatter_svg(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64, f64)], stamp: &RunStamp) -> String {
    let frame = Frame::fit(points.iter().map(|&(x, y, _)| (x, y)));
    let (lo, hi) = points
        .iter()
        .map(|p| p.2)
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = String::new();
    svg_open(&mut out, stamp, title, &frame, x_label, y_label);
    for &(x, y, v) in points {
        let t = if v.is_finite() { ((v - lo) / span).clamp(0.0, 1.0) } else { 0.0 };
        let (r, b) = ((255.0 * t).round() as u8, (255.0 * (1.0 - t)).round() as u8);
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="rgb({r},40,{b})"><title>{}</title></circle>"#,
            frame.px(x),
            frame.py(y),
            num(v)
        );
    }
    if lo.is_finite() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">range {} .. {}</text>"#,
            WIDTH - MARGIN,
            MARGIN - 8.0,
            tick(lo),
            tick(hi)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Rank map as an azimuth/polar-angle scatter in degrees.
pub fn rank_map_svg(db: &GhrtfDatabase, map: &RankMap, stamp: &RunStamp) -> String {
    let points: Vec<(f64, f64, f64)> = db
        .candidates()
        .positions()
        .iter()
        .zip(&map.values)
        .map(|(p, &r)| {
            (
                p.direction.azimuth.to_degrees(),
                p.direction.elevation.to_degrees(),
                r,
            )
        })
        .collect();
    scatter_svg(
        &format!("Effective rank per candidate ({})", map.set),
        "azimuth (deg)",
        "polar angle (deg)",
        &points,
        stamp,
    )
}
