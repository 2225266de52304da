//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library.
///
/// Variants are grouped by how the CLI maps them to exit codes: input and
/// configuration problems are validation errors (exit 2), everything numeric
/// (domain violations, degenerate series, non-stationarity, failed
/// estimation or sampler initialisation) is a numerical failure (exit 3).
#[derive(Error, Debug)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally invalid input (bad shapes, malformed files, broken config).
    #[error("validation error: {0}")]
    Validation(String),

    /// A series or statistic without enough variation to be usable.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Stationarity requirement `phi < 1` violated where the closed forms need it.
    #[error("nonstationary parameters: {0}")]
    Nonstationary(String),

    /// An estimator could not produce a finite result.
    #[error("estimation failure: {0}")]
    Estimation(String),

    /// No valid starting point found for a sampler.
    #[error("initialisation failure: {0}")]
    Initialisation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code the CLI uses for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Csv(_) | Error::Json(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
