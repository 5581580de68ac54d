//! GMRES via Arnoldi (modified Gram–Schmidt) with Givens rotations.
//!
//! Each Arnoldi step costs exactly one operator application; a nonzero
//! initial guess costs one more per restart cycle to form the residual.

use alloc::vec;
use alloc::vec::Vec;

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::math::{abs, axpy, dot, norm2, sqrt};

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOptions {
    /// Stop once `‖b − A d‖₂ ≤ tol_rel · ‖b‖₂`.
    pub tol_rel: f64,
    /// `None` means `min(m, 200)`.
    pub max_iter: Option<usize>,
    /// Restart length; `None` runs full GMRES.
    pub restart: Option<usize>,
    /// Initial guess; `None` means the zero vector.
    pub d0: Option<Vec<f64>>,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            tol_rel: 1e-5,
            max_iter: None,
            restart: None,
            d0: None,
        }
    }
}

impl GmresOptions {
    pub fn with_tol(tol_rel: f64) -> Self {
        GmresOptions {
            tol_rel,
            ..Default::default()
        }
    }

    fn validate(&self, m: usize) -> Result<usize> {
        if !(self.tol_rel > 0.0) {
            return Err(Error::invalid("GMRES tolerance must be positive"));
        }
        let max_iter = self.max_iter.unwrap_or(m.min(200));
        if max_iter == 0 {
            return Err(Error::invalid("GMRES max_iter must be at least 1"));
        }
        if self.restart == Some(0) {
            return Err(Error::invalid("GMRES restart length must be at least 1"));
        }
        if let Some(d0) = &self.d0 {
            if d0.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "GMRES initial guess",
                    expected: m,
                    found: d0.len(),
                });
            }
        }
        Ok(max_iter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresResult {
    pub d: Vec<f64>,
    /// Final residual norm `‖b − A d‖₂` as tracked by the Givens recurrence.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual norm after each iteration, starting with `‖r₀‖₂`.
    pub residual_history: Vec<f64>,
}

/// Solves `A d = b` by minimizing `‖b − A d‖₂` over `d₀ + K_n(A, r₀)`.
pub fn gmres<A: LinearOperator + ?Sized>(op: &A, b: &[f64], opts: &GmresOptions) -> Result<GmresResult> {
    let m = op.dim();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            what: "GMRES right-hand side",
            expected: m,
            found: b.len(),
        });
    }
    if !crate::math::all_finite(b) {
        return Err(Error::invalid("GMRES right-hand side is not finite"));
    }
    let max_iter = opts.validate(m)?;

    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(GmresResult {
            d: vec![0.0; m],
            residual_norm: 0.0,
            iterations: 0,
            converged: true,
            residual_history: vec![0.0],
        });
    }
    let target = opts.tol_rel * b_norm;

    let mut d = opts.d0.clone().unwrap_or_else(|| vec![0.0; m]);
    let mut have_guess = opts.d0.as_ref().is_some_and(|d0| d0.iter().any(|&x| x != 0.0));
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut w = vec![0.0; m];

    loop {
        let mut r = b.to_vec();
        if have_guess {
            op.apply(&d, &mut w)?;
            axpy(&mut r, -1.0, &w);
        }
        let beta = norm2(&r);
        if history.is_empty() {
            history.push(beta);
        }
        if beta <= target {
            return Ok(GmresResult {
                d,
                residual_norm: beta,
                iterations,
                converged: true,
                residual_history: history,
            });
        }
        if iterations >= max_iter {
            return Ok(GmresResult {
                d,
                residual_norm: beta,
                iterations,
                converged: false,
                residual_history: history,
            });
        }

        let cycle = opts.restart.unwrap_or(max_iter).min(max_iter - iterations);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cycle + 1);
        crate::math::scale(&mut r, 1.0 / beta);
        basis.push(r);
        // Column j of the Hessenberg matrix holds j + 2 entries.
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(cycle);
        let mut cs = Vec::with_capacity(cycle);
        let mut sn = Vec::with_capacity(cycle);
        let mut g = vec![0.0; cycle + 1];
        g[0] = beta;
        let mut residual = beta;
        let mut steps = 0;

        for j in 0..cycle {
            op.apply(&basis[j], &mut w)?;
            iterations += 1;
            steps = j + 1;
            let w_norm_before = norm2(&w);
            let mut h = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[i] = hij;
                axpy(&mut w, -hij, v);
            }
            let h_next = norm2(&w);
            h[j + 1] = h_next;

            for i in 0..j {
                let (c, s): (f64, f64) = (cs[i], sn[i]);
                let t = c * h[i] + s * h[i + 1];
                h[i + 1] = -s * h[i] + c * h[i + 1];
                h[i] = t;
            }
            let denom = sqrt(h[j] * h[j] + h[j + 1] * h[j + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[j] / denom, h[j + 1] / denom) };
            h[j] = c * h[j] + s * h[j + 1];
            h[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g[j + 1] = -s * g[j];
            g[j] *= c;
            residual = abs(g[j + 1]);
            history.push(residual);
            hess.push(h);

            let breakdown = h_next <= 1e-14 * w_norm_before.max(f64::MIN_POSITIVE);
            if residual <= target || breakdown || iterations >= max_iter {
                break;
            }
            let mut v = w.clone();
            crate::math::scale(&mut v, 1.0 / h_next);
            basis.push(v);
        }

        // Back substitution for the rotated triangular system.
        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let mut s = g[i];
            for k in i + 1..steps {
                s -= hess[k][i] * y[k];
            }
            y[i] = if hess[i][i] != 0.0 { s / hess[i][i] } else { 0.0 };
        }
        for (yi, v) in y.iter().zip(&basis) {
            axpy(&mut d, *yi, v);
        }
        have_guess = true;

        if residual <= target {
            return Ok(GmresResult {
                d,
                residual_norm: residual,
                iterations,
                converged: true,
                residual_history: history,
            });
        }
        let invariant = steps < cycle;
        if opts.restart.is_none() || iterations >= max_iter || invariant {
            return Ok(GmresResult {
                d,
                residual_norm: residual,
                iterations,
                converged: false,
                residual_history: history,
            });
        }
    }
}
