//! CSV, JSON sidecar, and optional SVG output for the command-line runs.

use crate::error::Result;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Write a CSV file with a header row; values are formatted with Rust's
/// shortest round-trip float printing, so identical data gives identical
/// bytes.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{}", header.join(",")).unwrap();
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", line.join(",")).unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write the JSON sidecar recording the full configuration and library
/// version.
pub fn write_sidecar(path: &Path, command: &str, params: serde_json::Value) -> Result<()> {
    let record = serde_json::json!({
        "command": command,
        "params": params,
        "library": "snake-walk",
        "version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(path, format!("{}\n", serde_json::to_string_pretty(&record).unwrap()))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, format!("{}\n", serde_json::to_string_pretty(value).unwrap()))?;
    Ok(())
}

/// Minimal SVG polyline plot of `(x, y)` series; a thin optional renderer
/// over the CSV data, not a plotting dependency.
pub fn write_svg(path: &Path, title: &str, series: &[(f64, f64)]) -> Result<()> {
    let (w, h, pad) = (640.0f64, 400.0f64, 40.0f64);
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in series {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if !x_lo.is_finite() || x_hi == x_lo {
        x_hi = x_lo + 1.0;
    }
    if !y_lo.is_finite() || y_hi == y_lo {
        y_hi = y_lo + 1.0;
    }
    let sx = |x: f64| pad + (x - x_lo) / (x_hi - x_lo) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y_lo) / (y_hi - y_lo) * (h - 2.0 * pad);
    let points: Vec<String> =
        series.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let svg = format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
            "<polyline points=\"{points}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n",
            "</svg>\n"
        ),
        w = w,
        h = h,
        tx = w / 2.0,
        title = title,
        points = points.join(" ")
    );
    fs::write(path, svg)?;
    Ok(())
}

/// Accumulates the artifact files a run produced.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

impl Artifacts {
    pub fn add(&mut self, path: PathBuf) -> &PathBuf {
        self.files.push(path);
        self.files.last().unwrap()
    }
}
