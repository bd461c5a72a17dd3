//! Error types shared across the library.

use thiserror::Error;

/// Errors produced by algebra, statistics, model, and optimizer operations.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Operand shapes disagree (hypervector length, matrix dimension, vector length).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An input failed a structural invariant (normalization, unitarity, probability range).
    #[error("validation error: {0}")]
    Validation(String),

    /// An operation was invoked with an inconsistent or incomplete configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A non-empty collection was required.
    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
