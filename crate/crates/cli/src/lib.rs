//! Command-line driver: JSON configured runs, certificates, viscosity sweeps
//! and run reports.

pub mod commands;
pub mod config;
pub mod snapshot;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error(transparent)]
    Core(#[from] qfluid_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Numerical failures exit with 3, everything else with 2.
    pub fn is_numerical(&self) -> bool {
        use qfluid_core::Error as E;
        matches!(
            self,
            CliError::Core(E::Vacuum { .. } | E::Blowup { .. } | E::NoConvergence { .. } | E::Degenerate(_))
        )
    }

    pub fn exit_code(&self) -> u8 {
        if self.is_numerical() {
            3
        } else {
            2
        }
    }

    pub fn status(&self) -> &'static str {
        if self.is_numerical() {
            "numerical_failure"
        } else {
            "config_error"
        }
    }
}
