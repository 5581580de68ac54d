//! BFGS ascent with backtracking line search.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, cbrt, dot, norm_inf};

/// A smooth objective to be maximized.
pub trait SmoothObjective {
    fn value(&mut self, x: &[f64]) -> Result<f64>;

    fn gradient(&mut self, x: &[f64], grad: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximizeOptions {
    /// Stop once `‖∇f‖∞ ≤ tol_grad`.
    pub tol_grad: f64,
    pub max_iter: usize,
    /// Largest sup-norm step tried by the line search.
    pub max_step: f64,
    /// Absolute noise level of `f`; the sufficient-increase test is relaxed
    /// by this amount plus a few ulps of `|f|`.
    pub f_noise: f64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            tol_grad: 1e-8,
            max_iter: 1000,
            max_step: 5.0,
            f_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub message: Option<String>,
}

impl MaximizeResult {
    pub fn gradient_norm(&self) -> f64 {
        norm_inf(&self.gradient)
    }
}

/// Quasi-Newton maximization of `obj` from `x0`.
///
/// Returns `converged = false` with the best iterate when the line search
/// cannot find an increase or the iteration cap is hit; objective errors
/// propagate.
pub fn maximize_smooth<O: SmoothObjective + ?Sized>(
    obj: &mut O,
    x0: &[f64],
    opts: &MaximizeOptions,
) -> Result<MaximizeResult> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut f = obj.value(&x)?;
    if !f.is_finite() {
        return Err(Error::Optimizer(format!("objective is not finite at the starting point ({f})")));
    }
    let mut g = vec![0.0; n];
    obj.gradient(&x, &mut g)?;
    // Inverse of the negative Hessian, row-major.
    let mut hinv = identity(n);
    let mut first_update = true;
    let mut iterations = 0;

    let finish = |x: Vec<f64>, value, gradient: Vec<f64>, iterations, converged, message| MaximizeResult {
        x,
        value,
        gradient,
        iterations,
        converged,
        message,
    };

    loop {
        if norm_inf(&g) <= opts.tol_grad {
            return Ok(finish(x, f, g, iterations, true, None));
        }
        if iterations >= opts.max_iter {
            return Ok(finish(x, f, g, iterations, false, Some(String::from("iteration cap reached"))));
        }

        let mut p = mat_vec(&hinv, &g, n);
        let mut slope = dot(&g, &p);
        if !(slope > 0.0) {
            hinv = identity(n);
            first_update = true;
            p = g.clone();
            slope = dot(&g, &p);
        }
        let p_norm = norm_inf(&p);
        if p_norm > opts.max_step {
            let s = opts.max_step / p_norm;
            p.iter_mut().for_each(|v| *v *= s);
            slope *= s;
        }

        let slack = opts.f_noise + 4.0 * f64::EPSILON * abs(f);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + t * b).collect();
            let ft = obj.value(&trial)?;
            if ft.is_finite() && ft >= f + 1e-4 * t * slope - slack {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            return Ok(finish(x, f, g, iterations, false, Some(String::from("line search failed"))));
        };

        let mut g_new = vec![0.0; n];
        obj.gradient(&x_new, &mut g_new)?;
        iterations += 1;

        // Curvature pair for the minimization of −f.
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * crate::math::norm2(&s) * crate::math::norm2(&y) && sy > 0.0 {
            if first_update {
                let scale = sy / dot(&y, &y);
                hinv.iter_mut().for_each(|v| *v *= 0.0);
                for i in 0..n {
                    hinv[i * n + i] = scale;
                }
                first_update = false;
            }
            bfgs_update(&mut hinv, &s, &y, sy, n);
        }

        x = x_new;
        f = f_new;
        g = g_new;
    }
}

/// Central-difference gradient of `f` with step `∛u · max(|xᵢ|, 1)`.
pub fn central_difference_gradient<F>(mut f: F, x: &[f64], grad: &mut [f64]) -> Result<()>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut point = x.to_vec();
    for i in 0..x.len() {
        let h = cbrt(f64::EPSILON) * abs(x[i]).max(1.0);
        point[i] = x[i] + h;
        let fp = f(&point)?;
        point[i] = x[i] - h;
        let fm = f(&point)?;
        point[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }
    Ok(())
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| dot(&m[i * n..(i + 1) * n], v)).collect()
}

/// `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ`
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y, n);
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
