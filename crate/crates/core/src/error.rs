use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vertex enumeration budget exceeded: {combinations} combinations > {budget}")]
    VertexBudget { combinations: u128, budget: u64 },
    #[error("polytope is unbounded or has no vertices")]
    Unbounded,
    #[error("polytope is empty or flat")]
    Degenerate,
    #[error("containment precondition violated: {0}")]
    NotContained(String),
    #[error("origin is not interior (offset {0} <= 0)")]
    OriginNotInterior(f64),
    #[error("empty input")]
    EmptyInput,
    #[error("ellipsoid iteration did not converge after {0} iterations")]
    MveeNonConvergence(usize),
    #[error("point lies outside the domain")]
    OutsideDomain,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("corrupt serialized data: {0}")]
    Corrupt(String),
    #[error("ray shoot sandwich violated: {0}")]
    Sandwich(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
