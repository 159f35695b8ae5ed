use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not converged after {iterations} iterations (best residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("dense representation refused: dimension {dim} exceeds cap {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },
    #[error("exponential series did not reach tolerance within {terms} terms")]
    SeriesDiverged { terms: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
