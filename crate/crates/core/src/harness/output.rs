//! CSV tables and plot-data files.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! parsed file reproduces the written values exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

pub const SINR_HEADER: &str = "sweep_name,sweep_value,method,mean_sinr_db,stderr_db,mean_sinr_max_db,trials";
pub const MSE_HEADER: &str = "spread_ratio,lambda_max,lower,upper,empirical_mse";
pub const COMPLEXITY_HEADER: &str = "M,median_solve_seconds,repetitions";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub method: String,
    pub mean_sinr_db: f64,
    pub stderr_db: f64,
    pub mean_sinr_max_db: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseBoundsRow {
    pub spread_ratio: f64,
    pub lambda_max: f64,
    pub lower: f64,
    pub upper: f64,
    pub empirical_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRow {
    pub m: usize,
    pub median_solve_seconds: f64,
    pub repetitions: usize,
}

/// Output of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Sinr(Vec<ResultRow>),
    MseBounds(Vec<MseBoundsRow>),
    Complexity(Vec<ComplexityRow>),
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            Table::Sinr(rows) => {
                out.push_str(SINR_HEADER);
                out.push('\n');
                for r in rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        r.sweep_name, r.sweep_value, r.method, r.mean_sinr_db, r.stderr_db, r.mean_sinr_max_db, r.trials
                    );
                }
            }
            Table::MseBounds(rows) => {
                out.push_str(MSE_HEADER);
                out.push('\n');
                for r in rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        r.spread_ratio, r.lambda_max, r.lower, r.upper, r.empirical_mse
                    );
                }
            }
            Table::Complexity(rows) => {
                out.push_str(COMPLEXITY_HEADER);
                out.push('\n');
                for r in rows {
                    let _ = writeln!(out, "{},{},{}", r.m, r.median_solve_seconds, r.repetitions);
                }
            }
        }
        out
    }

    /// Wide layout for plotting: the x column followed by one column per
    /// series.
    pub fn to_plot_csv(&self) -> String {
        let mut out = String::new();
        match self {
            Table::Sinr(rows) => {
                let x_name = rows.first().map(|r| r.sweep_name.as_str()).unwrap_or("sweep_value");
                let mut methods: Vec<&str> = Vec::new();
                let mut xs: Vec<f64> = Vec::new();
                for r in rows {
                    if !methods.contains(&r.method.as_str()) {
                        methods.push(&r.method);
                    }
                    if !xs.contains(&r.sweep_value) {
                        xs.push(r.sweep_value);
                    }
                }
                let _ = writeln!(out, "{x_name},{}", methods.join(","));
                for x in xs {
                    let cells: Vec<String> = methods
                        .iter()
                        .map(|m| {
                            rows.iter()
                                .find(|r| r.sweep_value == x && r.method == *m)
                                .map(|r| r.mean_sinr_db.to_string())
                                .unwrap_or_default()
                        })
                        .collect();
                    let _ = writeln!(out, "{x},{}", cells.join(","));
                }
            }
            Table::MseBounds(_) | Table::Complexity(_) => out = self.to_csv(),
        }
        out
    }

    /// Axis and series description for the plot sidecar.
    pub fn describe(&self) -> String {
        match self {
            Table::Sinr(rows) => {
                let x = rows.first().map(|r| r.sweep_name.as_str()).unwrap_or("sweep_value");
                let mut unique: Vec<&str> = Vec::new();
                for r in rows {
                    if !unique.contains(&r.method.as_str()) {
                        unique.push(&r.method);
                    }
                }
                format!(
                    "x axis: {x}\ny axis: mean output SINR in dB (10 log10 of the trial-average linear SINR)\nseries: {}\n",
                    unique.join(", ")
                )
            }
            Table::MseBounds(_) => "x axis: lambda_max\ny axis: MSE of the additive mismatch model\nseries: lower, upper, empirical_mse (one curve set per spread_ratio)\n".to_string(),
            Table::Complexity(_) => "x axis: M (log scale)\ny axis: median weight-solve time in seconds (log scale)\nseries: median_solve_seconds\n".to_string(),
        }
    }

    pub fn parse_sinr_csv(text: &str) -> Result<Vec<ResultRow>> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header != SINR_HEADER {
            return Err(parse_error(1, format!("unexpected header `{header}`")));
        }
        lines
            .enumerate()
            .map(|(i, line)| {
                let line_no = i + 2;
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 7 {
                    return Err(parse_error(line_no, format!("expected 7 fields, got {}", f.len())));
                }
                let num = |s: &str| s.parse::<f64>().map_err(|_| parse_error(line_no, format!("bad number `{s}`")));
                Ok(ResultRow {
                    sweep_name: f[0].to_string(),
                    sweep_value: num(f[1])?,
                    method: f[2].to_string(),
                    mean_sinr_db: num(f[3])?,
                    stderr_db: num(f[4])?,
                    mean_sinr_max_db: num(f[5])?,
                    trials: f[6]
                        .parse()
                        .map_err(|_| parse_error(line_no, format!("bad count `{}`", f[6])))?,
                })
            })
            .collect()
    }
}

fn parse_error(line: usize, message: String) -> Error {
    Error::Parse {
        path: "<csv>".to_string(),
        line,
        message,
    }
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<()> {
    std::fs::write(path, table.to_csv()).map_err(|e| Error::io(path, e))
}

/// Writes the wide plot CSV at `path` and a `.txt` sidecar next to it that
/// names the axes and series and records `provenance`.
pub fn emit_plot_data(table: &Table, path: &Path, provenance: &str) -> Result<()> {
    std::fs::write(path, table.to_plot_csv()).map_err(|e| Error::io(path, e))?;
    let sidecar = path.with_extension("txt");
    let text = format!("{}{}", table.describe(), provenance);
    std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
}
