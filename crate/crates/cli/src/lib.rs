//! Config-driven scenario runner for `fe-workbench`.
//!
//! A run resolves a [`config::ScenarioConfig`] against the
//! [`registry`], executes the scenario into an output directory and
//! finishes with a `manifest.json` listing every file with its SHA-256.

pub mod config;
pub mod output;
pub mod registry;
mod scenarios;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration.
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] fe_workbench::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input, 4 for file-system trouble, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        use fe_workbench::Error as E;
        match self {
            CliError::Config(_) | CliError::Core(E::Validation(_) | E::Parse(_)) => 2,
            CliError::Io(_) | CliError::Core(E::Io(_)) => 4,
            CliError::Core(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub use config::ScenarioConfig;
pub use output::{run_scenario, RunManifest};
