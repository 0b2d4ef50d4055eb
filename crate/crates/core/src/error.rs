use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by fitting, evaluation, sampling and data handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {value} is outside the open unit interval")]
    InvalidProbability { value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("cdf decreases by {drop:e} between y = {left} and y = {right}")]
    NonMonotoneCdf { left: f64, right: f64, drop: f64 },

    #[error("root finding did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid vine structure: {0}")]
    InvalidStructure(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::NonMonotoneCdf { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
