use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not symmetric (entry ({row}, {col}))")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("mode {mode} out of range for a {order}-way tensor")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("invalid tensor shape: {0}")]
    InvalidShape(String),
    #[error("block operator is rank deficient: {0}")]
    RankDeficient(String),
    #[error("invalid groups: {0}")]
    InvalidGroups(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(
        "interpolation solve stopped after {iterations} iterations \
         (value {value:e}, feasibility {feasibility:e}, change {change:e})"
    )]
    NotConverged {
        iterations: usize,
        value: f64,
        feasibility: f64,
        change: f64,
        /// Best feasible decomposition found so far.
        best: Vec<f64>,
    },
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
