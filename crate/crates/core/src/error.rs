use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Which side of a central difference produced a non-finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl core::fmt::Display for Side {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Side::Plus => f.write_str("+"),
            Side::Minus => f.write_str("-"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is singular to working precision (pivot {index} = {value:e})")]
    Singular { index: usize, value: f64 },

    #[error("non-finite function value on the {side} side of the central difference")]
    NonFiniteEvaluation { side: Side },

    #[error("fixed-point iteration stopped after {iterations} iterations with residual {residual:e}")]
    FixedPointNotConverged { iterations: usize, residual: f64 },

    #[error("equilibrium solve failed at theta {theta:?}: residual {residual:e}")]
    Equilibrium { theta: Vec<f64>, residual: f64 },

    #[error("GMRES did not converge on column {column}: relative residual {relative_residual:e} after {iterations} iterations")]
    GmresNotConverged {
        column: String,
        relative_residual: f64,
        iterations: usize,
    },

    #[error("stationary distribution did not converge after {iterations} iterations (change {change:e})")]
    StationaryNotConverged { iterations: usize, change: f64 },

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("instance too large for dense diagnostics: |Y| = {size} exceeds {limit}; use a smaller game")]
    TooLarge { size: usize, limit: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
