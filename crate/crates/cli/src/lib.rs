//! Batch experiment runner: one JSON config in, CSV tables, the resolved
//! config and a plain-text summary out.
//!
//! Exit codes: 0 on success, 1 on a failed check or an I/O error, 2 on a
//! configuration error.

pub mod config;
pub mod experiments;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{Experiment, ExperimentConfig};
pub use output::{emit_csv, Cell, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        message: String,
    },

    #[error("cannot write {}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] semimart_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Io { .. } | Self::Core(_) => 1,
        }
    }
}

/// Files written by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub data_files: Vec<PathBuf>,
    pub passed: bool,
    pub lines: Vec<String>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Reads the config at `path`, applies flag overrides and runs it.
pub fn run(
    path: &Path,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<RunReport, CliError> {
    let source = fs::read_to_string(path).map_err(|e| CliError::Config {
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut config = ExperimentConfig::from_json(&source)?;
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    run_config(&config)
}

/// Runs a validated config and writes every output.
pub fn run_config(config: &ExperimentConfig) -> Result<RunReport, CliError> {
    config.validate(None)?;
    let resolved = config.resolved();
    let outcome = experiments::run_experiment(&resolved)?;

    let dir = &resolved.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.clone(),
        message: e.to_string(),
    })?;
    let mut data_files = Vec::with_capacity(outcome.tables.len());
    for (name, table) in &outcome.tables {
        let path = dir.join(name);
        emit_csv(table, &path)?;
        data_files.push(path);
    }
    let echo = serde_json::to_string_pretty(&resolved).expect("config serializes");
    output::write_text(&dir.join("resolved_config.json"), &(echo + "\n"))?;
    let mut lines = outcome.lines.clone();
    lines.push(format!(
        "{} {}",
        if outcome.passed { "PASS" } else { "FAIL" },
        resolved.experiment.name()
    ));
    output::write_text(
        &dir.join("summary.txt"),
        &output::summary_text(resolved.experiment.name(), resolved.seed, &lines),
    )?;

    Ok(RunReport {
        output_dir: dir.clone(),
        data_files,
        passed: outcome.passed,
        lines,
    })
}
