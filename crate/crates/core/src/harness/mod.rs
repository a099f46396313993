//! Scenario configs, experiment drivers and file output.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{Method, Param, ScenarioConfig, SweepAxis};
pub use experiments::{provenance, run_experiment, Experiment};
pub use output::{emit_csv, emit_plot_data, ResultRow, Table};

use crate::{Error, Result};

/// Runs `exp` and writes `<name>.csv`, `<name>.plot.csv` and
/// `<name>.plot.txt` into `out_dir`. Returns the written paths.
pub fn run_to_dir(exp: Experiment, cfg: &ScenarioConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let table = run_experiment(exp, cfg)?;
    let csv = out_dir.join(format!("{}.csv", exp.name()));
    let plot = out_dir.join(format!("{}.plot.csv", exp.name()));
    emit_csv(&table, &csv)?;
    emit_plot_data(&table, &plot, &provenance(exp, cfg))?;
    Ok(vec![csv, plot.clone(), plot.with_extension("txt")])
}
