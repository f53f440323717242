use thiserror::Error;

use crate::analytics::AnalyticsError;
use crate::diagnosis::DiagnosisError;
use crate::harness::HarnessError;
use crate::radio::RadioError;
use crate::scenario::ScenarioError;
use crate::sim::SimError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-level error, wrapping the per-module errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Diagnosis(#[from] DiagnosisError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by bad user input (configuration, validation,
    /// malformed files) rather than a runtime contract violation.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Scenario(_) | Error::Io { .. } => true,
            Error::Harness(e) => e.is_config_error(),
            _ => false,
        }
    }
}
