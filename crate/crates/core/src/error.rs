use thiserror::Error;

use crate::linalg::SolveStats;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coefficient is not positive at ({x}, {y}): value {value}")]
    NonPositiveCoefficient { x: f64, y: f64, value: f64 },

    #[error("linear solve did not converge after {} iterations (residual {:e})", .0.iterations, .0.final_residual)]
    NotConverged(SolveStats),

    #[error("conjugate gradient breakdown at iteration {iteration}: system matrix is not positive definite{hint}")]
    NotPositiveDefinite { iteration: usize, hint: String },

    #[error("problem with {dofs} free dofs exceeds the dense oracle cap of {cap}")]
    OracleCap { dofs: usize, cap: usize },

    #[error("right-hand side has no closed-form sine expansion")]
    UnsupportedRhs,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
