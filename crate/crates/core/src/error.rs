use thiserror::Error;

/// Failures of ring and matrix arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("operands live in different rings")]
    ParamMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("determinant is only supported for n <= 4, got n = {0}")]
    UnsupportedDimension(usize),
}
