use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {dim} exceeds configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("unknown register label {0}")]
    UnknownLabel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate kernel of dimension {0}")]
    DegenerateKernel(usize),
    #[error("no zero mode within tolerance {0:.3e}")]
    NoZeroMode(f64),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
