//! Command-line front end: configuration, per-pixel pipelines and the
//! delimited output formats behind the `drought` binary.

pub mod args;
pub mod config;
pub mod output;
pub mod run;
pub mod synth;

use std::path::Path;

use thiserror::Error;

pub use args::{execute, Cli, Command};
pub use config::RunConfig;
pub use run::{cmd_analyze, cmd_si, cmd_smi, PixelModel, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config field '{field}': {reason}")]
    Config { field: String, reason: String },
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("all {0} pixels failed; see warnings.txt")]
    AllPixelsFailed(usize),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    /// 1 config error, 2 data error, 3 numerical failure on all pixels.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) | CliError::AllPixelsFailed(_) => 3,
        }
    }
}
