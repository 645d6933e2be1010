use thiserror::Error;

/// Errors raised by the optimizers, the benchmark generator and the linear
/// algebra helpers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("objective returned a non-finite value ({value}) for particle {particle}")]
    NonFiniteObjective { particle: usize, value: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("matrix is not symmetric (asymmetry {asymmetry:e} exceeds {tolerance:e})")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
