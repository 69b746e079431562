//! CSV, JSON and plot-script emission for sweep records.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::crb::CrbFlags;
use crate::error::{CrbError, Result};
use crate::extended;
use crate::sweep::SweepRecord;

pub const CSV_HEADER: [&str; 6] = [
    "sweep_var",
    "sweep_value",
    "model",
    "crb_r_m2",
    "crb_theta_rad2",
    "flags",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CrbError + '_ {
    move |source| CrbError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(e: csv::Error) -> CrbError {
    CrbError::ConfigParse(format!("csv: {e}"))
}

pub fn to_csv_string(records: &[SweepRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.sweep_var.clone(),
            extended::format(r.sweep_value),
            r.model.name().to_string(),
            extended::format(r.crb_r),
            extended::format(r.crb_theta),
            r.flags.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CrbError::ConfigParse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(CrbError::ConfigParse(format!("unexpected CSV header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = i + 2;
        let num = |j: usize| {
            extended::parse(&row[j])
                .ok_or_else(|| CrbError::ConfigParse(format!("line {line}: bad number '{}'", &row[j])))
        };
        out.push(SweepRecord {
            sweep_var: row[0].to_string(),
            sweep_value: num(1)?,
            model: row[2].parse()?,
            crb_r: num(3)?,
            crb_theta: num(4)?,
            flags: row[5].parse::<CrbFlags>()?,
        });
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    parse_csv(&fs::read_to_string(path).map_err(io_err(path))?)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(contents).map_err(io_err(path))
}

pub fn write_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    write_file(path, to_csv_string(records)?.as_bytes())
}

pub fn write_json(records: &[SweepRecord], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(records).expect("records serialize");
    write_file(path, (text + "\n").as_bytes())
}

/// Matplotlib script that reads the CSV next to it and plots both bounds
/// against the sweep variable, one line per model.
pub fn plot_script(csv_name: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
import csv
import math
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
CSV = os.path.join(HERE, {csv_name:?})


def value(s):
    return math.inf if s == "inf" else float(s)


series = {{}}
var = None
with open(CSV, newline="") as f:
    for row in csv.DictReader(f):
        var = row["sweep_var"]
        s = series.setdefault(row["model"], ([], [], []))
        s[0].append(value(row["sweep_value"]))
        s[1].append(value(row["crb_r_m2"]))
        s[2].append(value(row["crb_theta_rad2"]))

fig, (ax_r, ax_t) = plt.subplots(1, 2, figsize=(11, 4))
for model, (x, cr, ct) in sorted(series.items()):
    if any(math.isfinite(v) for v in cr):
        ax_r.semilogy(x, cr, label=model)
    ax_t.semilogy(x, ct, label=model)
ax_r.set_xlabel(var)
ax_r.set_ylabel("CRB range [m^2]")
ax_t.set_xlabel(var)
ax_t.set_ylabel("CRB angle [rad^2]")
for ax in (ax_r, ax_t):
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.splitext(CSV)[0] + ".png", dpi=150)
"#
    )
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

pub fn emit_outputs(records: &[SweepRecord], paths: &OutputPaths) -> Result<()> {
    if records.is_empty() {
        return Err(CrbError::InvalidConfiguration("no records to write".into()));
    }
    if let Some(p) = &paths.csv {
        write_csv(records, p)?;
    }
    if let Some(p) = &paths.json {
        write_json(records, p)?;
    }
    if let Some(p) = &paths.plot {
        let csv = paths.csv.as_ref().ok_or_else(|| {
            CrbError::InvalidConfiguration("a plot script needs a CSV output path".into())
        })?;
        let csv_abs = csv.canonicalize().map_err(io_err(csv))?;
        let dir = p
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let dir_abs = dir.canonicalize().map_err(io_err(dir))?;
        let rel = relative_path(&dir_abs, &csv_abs);
        write_file(p, plot_script(&rel.to_string_lossy()).as_bytes())?;
    }
    Ok(())
}

fn relative_path(from_dir: &Path, to: &Path) -> PathBuf {
    let a: Vec<_> = from_dir.components().collect();
    let b: Vec<_> = to.components().collect();
    let common = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut out = PathBuf::new();
    for _ in common..a.len() {
        out.push("..");
    }
    for c in &b[common..] {
        out.push(c);
    }
    out
}
