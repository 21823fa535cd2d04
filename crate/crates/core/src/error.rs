use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("inclusions overlap at ({x}, {y}) in parameter {parameter}")]
    Overlap {
        x: f64,
        y: f64,
        parameter: &'static str,
    },
    #[error("modal transmission system is singular at angular mode {mode} (condition {condition:e})")]
    SingularMode { mode: i32, condition: f64 },
    #[error("series coefficients have not decayed by order {order} (tail {tail:e})")]
    TruncationOverflow { order: usize, tail: f64 },
    #[error("iterative solve did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("grid under-resolved: {0}")]
    UnderResolved(String),
    #[error("direction grid mismatch: {0}")]
    GridMismatch(String),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
