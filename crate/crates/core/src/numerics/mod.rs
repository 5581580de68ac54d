//! Numerical kernels shared by the game model and the estimators.

pub mod anderson;
pub mod dense;
pub mod fd;
pub mod gmres;
pub mod optimize;

pub use anderson::{fixed_point_solve, AndersonOptions, FixedPointResult};
pub use dense::{condition_number_2, direct_solve, LuFactor, Matrix};
pub use fd::{epsilon_rule, fd_jvp, CentralDifferenceOperator};
pub use gmres::{gmres, GmresOptions, GmresResult};
pub use optimize::{
    central_difference_gradient, maximize_smooth, MaximizeOptions, MaximizeResult, SmoothObjective,
};

use crate::error::Result;

/// A square linear map known only through its action `v ↦ Av`.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Writes `A x` into `out`.
    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
}

impl LinearOperator for Matrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.matvec(x, out);
        Ok(())
    }
}

/// Adapts a closure to [`LinearOperator`].
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnOperator { dim, f }
    }
}

impl<F> LinearOperator for FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(x, out)
    }
}
