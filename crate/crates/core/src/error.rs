use thiserror::Error;

/// Errors raised by the integrators and their building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A state component that must be strictly positive is not.
    #[error("component {index} is not strictly positive (value {value:e})")]
    NonPositive { index: usize, value: f64 },

    /// A quantity left the domain of a function (e.g. log of a negative number).
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector or matrix sizes do not agree.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// LU factorization met a numerically zero pivot.
    #[error("singular matrix: pivot {pivot:e} in column {column} below threshold")]
    Singular { column: usize, pivot: f64 },

    /// Scheme or configuration parameters outside their admissible domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested combination is not provided by this implementation.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Time integration could not continue.
    #[error("integration aborted at t = {t}: {reason}")]
    Aborted { t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
