//! Experiment harness around `csb-core`: configuration files, sweep
//! execution, persisted signals and reports, plots and circuit export.

pub mod config;
pub mod driver;
pub mod export;
pub mod output;
pub mod plot;

use std::path::PathBuf;

use csb_core::CsbError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("plot: {0}")]
    Plot(String),

    #[error(transparent)]
    Core(#[from] CsbError),
}

pub type Result<T> = std::result::Result<T, CliError>;
