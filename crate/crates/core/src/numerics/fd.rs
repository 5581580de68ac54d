//! Central-difference Jacobian-vector products.
//!
//! For `g: ℝᵐ → ℝᵐ` twice differentiable,
//! `(g(y + εd) − g(y − εd)) / 2ε = ∇g(y)·d + O(ε²)`. With evaluation noise of
//! order `u` the total error is `O(ε²) + O(u/ε)`, which motivates the step in
//! [`epsilon_rule`].

use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use super::LinearOperator;
use crate::error::{Error, Result, Side};
use crate::math::{all_finite, cbrt, norm_inf};

/// `∛u / max(‖y‖∞, 1e-8)` with `u` the binary64 machine epsilon.
pub fn epsilon_rule(y: &[f64]) -> f64 {
    cbrt(f64::EPSILON) / norm_inf(y).max(1e-8)
}

/// Central-difference approximation of `∇g(y)·d` with the step from
/// [`epsilon_rule`]. Calls `g` exactly twice.
pub fn fd_jvp<G>(g: G, y: &[f64], d: &[f64]) -> Result<Vec<f64>>
where
    G: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let eps = epsilon_rule(y);
    let mut out = vec![0.0; y.len()];
    fd_jvp_with_step(g, y, d, eps, &mut out)?;
    Ok(out)
}

/// Same as [`fd_jvp`] with an explicit step, writing into `out`.
pub fn fd_jvp_with_step<G>(mut g: G, y: &[f64], d: &[f64], eps: f64, out: &mut [f64]) -> Result<()>
where
    G: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    if d.len() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "JVP direction",
            expected: y.len(),
            found: d.len(),
        });
    }
    let mut point: Vec<f64> = y.iter().zip(d).map(|(a, b)| a + eps * b).collect();
    let mut plus = vec![0.0; out.len()];
    g(&point, &mut plus)?;
    if !all_finite(&plus) {
        return Err(Error::NonFiniteEvaluation { side: Side::Plus });
    }
    for ((p, a), b) in point.iter_mut().zip(y).zip(d) {
        *p = a - eps * b;
    }
    g(&point, out)?;
    if !all_finite(out) {
        return Err(Error::NonFiniteEvaluation { side: Side::Minus });
    }
    let inv = 0.5 / eps;
    for (o, p) in out.iter_mut().zip(&plus) {
        *o = (p - *o) * inv;
    }
    Ok(())
}

/// The linear operator `d ↦ (g(y + εd) − g(y − εd)) / 2ε` at a fixed point `y`.
pub struct CentralDifferenceOperator<G> {
    g: G,
    y: Vec<f64>,
    eps: f64,
    scratch: RefCell<(Vec<f64>, Vec<f64>)>,
}

impl<G> CentralDifferenceOperator<G>
where
    G: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    /// Uses the step from [`epsilon_rule`] at `y`.
    pub fn new(g: G, y: Vec<f64>) -> Self {
        let eps = epsilon_rule(&y);
        Self::with_step(g, y, eps)
    }

    pub fn with_step(g: G, y: Vec<f64>, eps: f64) -> Self {
        let m = y.len();
        CentralDifferenceOperator {
            g,
            y,
            eps,
            scratch: RefCell::new((vec![0.0; m], vec![0.0; m])),
        }
    }

    pub fn step(&self) -> f64 {
        self.eps
    }
}

impl<G> LinearOperator for CentralDifferenceOperator<G>
where
    G: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    fn dim(&self) -> usize {
        self.y.len()
    }

    fn apply(&self, d: &[f64], out: &mut [f64]) -> Result<()> {
        let mut scratch = self.scratch.borrow_mut();
        let (point, plus) = &mut *scratch;
        let eps = self.eps;
        for ((p, a), b) in point.iter_mut().zip(&self.y).zip(d) {
            *p = a + eps * b;
        }
        (self.g)(point, plus)?;
        if !all_finite(plus) {
            return Err(Error::NonFiniteEvaluation { side: Side::Plus });
        }
        for ((p, a), b) in point.iter_mut().zip(&self.y).zip(d) {
            *p = a - eps * b;
        }
        (self.g)(point, out)?;
        if !all_finite(out) {
            return Err(Error::NonFiniteEvaluation { side: Side::Minus });
        }
        let inv = 0.5 / eps;
        for (o, p) in out.iter_mut().zip(plus.iter()) {
            *o = (p - *o) * inv;
        }
        Ok(())
    }
}
