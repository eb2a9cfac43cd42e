use thiserror::Error;

/// Errors raised by network construction, evaluation and analysis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network size {0}: at least 2 spins are required")]
    InvalidSize(usize),

    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("node {node} out of range for a network of {n_spins} spins")]
    NodeOutOfRange { node: usize, n_spins: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver failure: {0}")]
    Numerical(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient data: need at least {needed} controllers, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("record error: {0}")]
    Record(String),
}

pub type Result<T> = std::result::Result<T, Error>;
