//! Experiment configuration, batch execution and CSV/JSON output.
//!
//! A run directory holds `results.csv` (one [`ResultRow`] per recorded
//! timestep of every run) and `summary.json` (final estimates, per-group
//! MSE and median KL). Trajectory files have columns `t, x0.., y0..`.

mod config;
mod oracle;
mod rows;
mod run;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

pub use config::{DataSpec, ExperimentConfig, OracleSettings, PmmhSettings, RunAlgorithm, SchemeName};
pub use oracle::{run_oracle, OracleReport};
pub use rows::{read_rows, read_trajectory, write_rows, write_trajectory, ResultRow, RowWriter, SCHEMA_VERSION};
pub use run::{
    cells, load_model, run_cell, run_experiment, simulate_data, Cell, Dataset, ExperimentSummary, GroupSummary,
    PmmhStats, RunOutput, RunSummary, STREAM_DATA,
};

use crate::error::{Error, Result};
use crate::model::Trajectory;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: serde::Serialize>(dir: &Path, value: &T) -> Result<()> {
    let mut w = create(dir, SUMMARY_FILE)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

/// Simulates a dataset and optionally writes it as a trajectory CSV.
pub fn cmd_simulate(cfg: &ExperimentConfig, seed: u64, out: Option<&Path>) -> Result<Trajectory> {
    cfg.validate()?;
    let model = load_model(cfg)?;
    let (traj, _) = simulate_data(&model, cfg.data.truth.as_deref(), cfg.data.steps, seed)?;
    if let Some(path) = out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        write_trajectory(BufWriter::new(File::create(path)?), &traj)?;
    }
    Ok(traj)
}

/// Runs one (N, M, L) setting over the configured seeds.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    if cfg.particles.len() != 1 || cfg.approx_samples.len() != 1 || cfg.mixtures.len() != 1 {
        return Err(Error::Config(
            "run takes a single N, M and L; use sweep for lists".into(),
        ));
    }
    cmd_sweep(cfg)
}

/// Runs the Cartesian product of N, M, L and seeds.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    match &cfg.output {
        Some(dir) => {
            let summary = run_experiment(cfg, Some(create(dir, RESULTS_FILE)?))?;
            write_json(dir, &summary)?;
            Ok(summary)
        }
        None => run_experiment::<std::io::Sink>(cfg, None),
    }
}

/// Runs the applicable oracle and writes its rows and report.
pub fn cmd_oracle(cfg: &ExperimentConfig) -> Result<(Vec<ResultRow>, OracleReport)> {
    let (rows, report) = run_oracle(cfg)?;
    if let Some(dir) = &cfg.output {
        write_rows(create(dir, RESULTS_FILE)?, &rows)?;
        write_json(dir, &report)?;
    }
    Ok((rows, report))
}

/// Process exit code for an error: 3 for numerical degeneracy, 2 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_degeneracy() {
        3
    } else {
        2
    }
}
