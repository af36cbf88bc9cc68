use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: String },

    #[error("negative weight {value} at row {row}")]
    NegativeWeight { row: usize, value: f64 },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pooled covariance is numerically zero")]
    DegenerateCovariance,

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("oracle size guard exceeded: {0}")]
    OracleGuard(String),

    #[error("non-finite intermediate at iteration {iteration}")]
    NonFiniteIteration { iteration: usize },

    #[error("invalid estimate: {0}")]
    InvalidEstimate(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
}

impl Error {
    /// Short stable identifier, used by the CLI for machine-parsable errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::NonFinite { .. } => "non_finite",
            Error::NegativeWeight { .. } => "negative_weight",
            Error::InvalidSample(_) => "invalid_sample",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::DegenerateCovariance => "degenerate_covariance",
            Error::Eigen(_) => "eigen",
            Error::OracleGuard(_) => "oracle_guard",
            Error::NonFiniteIteration { .. } => "non_finite_iteration",
            Error::InvalidEstimate(_) => "invalid_estimate",
            Error::Config { .. } => "config",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
