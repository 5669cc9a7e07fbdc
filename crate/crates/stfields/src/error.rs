//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its mathematical precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument lies outside the admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity grew past the representable range.
    #[error("range error: {0}")]
    Range(String),

    /// Mismatched dimensions between operands.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A model fails its validity conditions (PSD, entry bounds, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Numerical failure during evaluation (non-finite value, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Requested truncation cannot reach the target tolerance.
    #[error("truncation error: requested tolerance {requested:e}, achieved bound {achieved:e}")]
    Truncation { requested: f64, achieved: f64 },

    /// A run configuration is malformed or internally inconsistent.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
