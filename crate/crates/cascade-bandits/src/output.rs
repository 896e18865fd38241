//! Result tables and their file formats.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const CSV_HEADER: &str = "algorithm,round,mean_cum_regret,stderr,n_reps";
pub const SWEEP_CSV_HEADER: &str = "c,algorithm,final_mean_cum_regret,stderr,n_reps";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub round: u64,
    pub mean_cum_regret: f64,
    pub stderr: f64,
    pub n_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMeta {
    pub config_hash: String,
    pub seed: u64,
    pub git_describe: String,
    pub wall_time_secs: f64,
    pub failed_replications: Vec<String>,
}

/// Rows are grouped by algorithm (configuration order), then by round.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub meta: RunMeta,
}

impl ResultTable {
    pub fn algorithms(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.algorithm.as_str()) {
                out.push(&r.algorithm);
            }
        }
        out
    }

    pub fn series(&self, algorithm: &str) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.algorithm == algorithm).collect()
    }

    pub fn at(&self, algorithm: &str, round: u64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.round == round)
    }

    /// The last checkpoint of `algorithm`.
    pub fn final_row(&self, algorithm: &str) -> Option<&ResultRow> {
        self.series(algorithm).into_iter().max_by_key(|r| r.round)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            // `{}` on f64 prints the shortest string that parses back exactly
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.algorithm, r.round, r.mean_cum_regret, r.stderr, r.n_reps
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => return Err(csv_error(1, "missing or unexpected header")),
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(csv_error(i + 1, "expected 5 fields"));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| csv_error(i + 1, &e.to_string()));
            rows.push(ResultRow {
                algorithm: f[0].to_string(),
                round: f[1].trim().parse().map_err(|_| csv_error(i + 1, "bad round"))?,
                mean_cum_regret: num(f[2])?,
                stderr: num(f[3])?,
                n_reps: f[4].trim().parse().map_err(|_| csv_error(i + 1, "bad n_reps"))?,
            });
        }
        Ok(Self {
            rows,
            meta: RunMeta::default(),
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_csv(&text)
    }

    /// One gnuplot data block per algorithm (`round mean stderr`), blocks
    /// separated by two blank lines so `index N` selects an algorithm.
    pub fn to_plot_data(&self) -> String {
        let mut s = String::new();
        for (i, alg) in self.algorithms().into_iter().enumerate() {
            if i > 0 {
                s.push_str("\n\n");
            }
            let _ = writeln!(s, "# algorithm: {alg}");
            s.push_str("# round mean_cum_regret stderr\n");
            for r in self.series(alg) {
                let _ = writeln!(s, "{} {} {}", r.round, r.mean_cum_regret, r.stderr);
            }
        }
        s
    }

    pub fn write_plot_data(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_plot_data())
    }

    pub fn to_svg(&self) -> String {
        let series: Vec<(String, Vec<(f64, f64, f64)>)> = self
            .algorithms()
            .into_iter()
            .map(|a| {
                let pts = self
                    .series(a)
                    .iter()
                    .map(|r| (r.round as f64, r.mean_cum_regret, r.stderr))
                    .collect();
                (a.to_string(), pts)
            })
            .collect();
        svg_line_chart(&series, "round", "cumulative regret")
    }

    pub fn write_svg(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_svg())
    }

    pub fn write_meta(&self, path: &Path) -> Result<()> {
        write_file(path, &serde_json::to_string_pretty(&self.meta)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub c: u32,
    pub algorithm: String,
    pub final_mean_cum_regret: f64,
    pub stderr: f64,
    pub n_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub meta: RunMeta,
}

impl SweepTable {
    pub fn get(&self, c: u32, algorithm: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.c == c && r.algorithm == algorithm)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(SWEEP_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.c, r.algorithm, r.final_mean_cum_regret, r.stderr, r.n_reps
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv())
    }

    pub fn write_meta(&self, path: &Path) -> Result<()> {
        write_file(path, &serde_json::to_string_pretty(&self.meta)?)
    }

    /// Final regret against `c`, one series per algorithm.
    pub fn to_svg(&self) -> String {
        let mut algs: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !algs.contains(&r.algorithm.as_str()) {
                algs.push(&r.algorithm);
            }
        }
        let series: Vec<(String, Vec<(f64, f64, f64)>)> = algs
            .iter()
            .map(|a| {
                let pts = self
                    .rows
                    .iter()
                    .filter(|r| r.algorithm == *a)
                    .map(|r| (r.c as f64, r.final_mean_cum_regret, r.stderr))
                    .collect();
                (a.to_string(), pts)
            })
            .collect();
        svg_line_chart(&series, "prior shift c", "final cumulative regret")
    }
}

/// `results.csv` → `results.meta.json`.
pub fn meta_path(csv: &Path) -> std::path::PathBuf {
    csv.with_extension("meta.json")
}

fn csv_error(line: usize, msg: &str) -> HarnessError {
    HarnessError::Parse {
        path: "<csv>".into(),
        line,
        msg: msg.to_string(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#17becf",
];

/// Self-contained SVG with one polyline per series and a shaded ±1 stderr band.
fn svg_line_chart(series: &[(String, Vec<(f64, f64, f64)>)], x_label: &str, y_label: &str) -> String {
    const W: f64 = 720.0;
    const H: f64 = 450.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 170.0;
    const TOP: f64 = 20.0;
    const BOTTOM: f64 = 50.0;
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y, e) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y + e);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= 0.0 {
        y1 = 1.0;
    }
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - y / y1 * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>"#
    );
    let (ax0, ay0, ax1, ay1) = (LEFT, H - BOTTOM, W - RIGHT, TOP);
    let _ = writeln!(
        s,
        r#"<path d="M{ax0} {ay1} L{ax0} {ay0} L{ax1} {ay0}" stroke="black" fill="none"/>"#
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y1 * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(fx),
            ay0 + 16.0,
            trim_num(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            ax0 - 6.0,
            py(fy) + 4.0,
            trim_num(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (ax0 + ax1) / 2.0,
        H - 12.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (ay0 + ay1) / 2.0,
        xml_escape(y_label)
    );
    for (i, (name, p)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if p.len() > 1 {
            let upper = p.iter().map(|&(x, y, e)| format!("{:.2},{:.2}", px(x), py(y + e)));
            let lower = p.iter().rev().map(|&(x, y, e)| format!("{:.2},{:.2}", px(x), py((y - e).max(0.0))));
            let band: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
                band.join(" ")
            );
        }
        let line: Vec<String> = p
            .iter()
            .map(|&(x, y, _)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            ax1 + 12.0,
            ax1 + 32.0,
            ax1 + 38.0,
            ly + 4.0,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn trim_num(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}
