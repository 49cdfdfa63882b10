use thiserror::Error;

/// Errors produced by the modal regression library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("all sample weights are zero")]
    ZeroWeights,

    #[error("linear system is singular (jitter escalated to {jitter:e})")]
    SingularSystem { jitter: f64 },

    #[error("quadrature on [{a}, {b}] did not reach tolerance {tol:e}")]
    Quadrature { a: f64, b: f64, tol: f64 },

    #[error("invalid synthetic pairing: {model} cannot use {noise} noise")]
    InvalidPairing { model: String, noise: String },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("every grid cell failed during cross-validation")]
    AllCellsFailed,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
