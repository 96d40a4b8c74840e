use thiserror::Error;

/// Errors produced by the estimator and its supporting kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length {0} is not a triangular number p(p+1)/2")]
    NonTriangularLength(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension {p} exceeds the explicit-mode cap {cap}")]
    DimensionTooLarge { p: usize, cap: usize },

    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("{method} did not converge within {iterations} iterations")]
    NoConvergence { method: &'static str, iterations: usize },

    #[error("conjugate gradient reached {iterations} iterations with relative residual {residual:e}")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("sigma update failed: {0}")]
    SigmaUpdateFailure(String),

    #[error("hub model requires p divisible by 5, got p = {0}")]
    HubDivisibility(usize),

    #[error("no diagonal constant achieves condition ratio {target}")]
    ConditioningFailure { target: f64 },

    #[error("class {class} has {size} samples; at least 2 are required")]
    ClassTooSmall { class: usize, size: usize },

    #[error("variance at index {index} is not positive ({value})")]
    NonPositiveVariance { index: usize, value: f64 },

    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),

    #[error("no grid cell produced a converged fit")]
    AllCellsFailed,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
