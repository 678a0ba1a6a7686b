//! Configuration-driven front end for `skewfib-core`.
//!
//! A run takes a [`RunConfig`] and a [`Command`] and produces a [`Report`]
//! (sorted-key JSON) plus, for `foliation` and `lift`, a CSV table.

mod commands;
pub mod config;
mod report;

use std::path::Path;

use thiserror::Error;

pub use commands::run;
pub use config::RunConfig;
pub use report::{CsvTable, Outcome, Report, Status};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] skewfib_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Certify,
    Foliation,
    Lift,
    Homotopy,
    Demo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Foliation => "foliation",
            Command::Lift => "lift",
            Command::Homotopy => "homotopy",
            Command::Demo => "demo",
        }
    }
}

/// Writes `report.json` and the CSV table, if any, into `dir`.
pub fn write_outputs(outcome: &Outcome, dir: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join("report.json"), outcome.report.to_json()).map_err(io)?;
    if let Some(table) = &outcome.csv {
        table.write(&dir.join(table.name)).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}
