//! Fixed-point iteration with Type-II Anderson acceleration.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::dense::Matrix;
use crate::error::{Error, Result};
use crate::math::{dot, norm_inf};

#[derive(Debug, Clone, PartialEq)]
pub struct AndersonOptions {
    /// Number of past residual differences kept; 0 gives plain iteration.
    pub memory: usize,
    /// Mixing weight in (0, 1].
    pub damping: f64,
    pub max_iter: usize,
    /// Stop once `‖map(y) − y‖∞ ≤ tol`.
    pub tol: f64,
}

impl Default for AndersonOptions {
    fn default() -> Self {
        AndersonOptions {
            memory: 5,
            damping: 1.0,
            max_iter: 10_000,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    pub y: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖map(y) − y‖∞` at the returned point.
    pub residual: f64,
}

/// Iterates `y ← map(y)` with Anderson mixing until the sup-norm residual
/// drops below `opts.tol`.
///
/// The returned `y` is always a point at which the residual was evaluated, so
/// `converged` certifies `‖map(y) − y‖∞ ≤ tol`.
pub fn fixed_point_solve<F>(mut map: F, y0: &[f64], opts: &AndersonOptions) -> Result<FixedPointResult>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::invalid("Anderson damping must lie in (0, 1]"));
    }
    let n = y0.len();
    let mut x = y0.to_vec();
    let mut gx = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut df: VecDeque<Vec<f64>> = VecDeque::with_capacity(opts.memory);
    let mut dg: VecDeque<Vec<f64>> = VecDeque::with_capacity(opts.memory);
    let mut best = f64::INFINITY;
    let mut iterations = 0;

    loop {
        map(&x, &mut gx)?;
        for ((fi, g), xi) in f.iter_mut().zip(&gx).zip(&x) {
            *fi = g - xi;
        }
        let residual = norm_inf(&f);
        if !residual.is_finite() {
            return Ok(FixedPointResult {
                y: x,
                iterations,
                converged: false,
                residual,
            });
        }
        if residual <= opts.tol || iterations >= opts.max_iter {
            return Ok(FixedPointResult {
                y: x,
                iterations,
                converged: residual <= opts.tol,
                residual,
            });
        }

        if opts.memory > 0 {
            // Restart the history when extrapolation has clearly gone astray.
            if residual > 1e4 * best {
                df.clear();
                dg.clear();
                prev = None;
            }
            if let Some((pf, pg)) = prev.take() {
                if df.len() == opts.memory {
                    df.pop_front();
                    dg.pop_front();
                }
                df.push_back(f.iter().zip(&pf).map(|(a, b)| a - b).collect());
                dg.push_back(gx.iter().zip(&pg).map(|(a, b)| a - b).collect());
            }
        }
        best = best.min(residual);

        let gamma = if df.is_empty() { None } else { mixing_weights(&df, &f) };
        let next: Vec<f64> = match gamma {
            Some(gamma) => {
                let mut g_mix = gx.clone();
                let mut f_mix = f.clone();
                for ((gm, dgi), dfi) in gamma.iter().zip(&dg).zip(&df) {
                    crate::math::axpy(&mut g_mix, -gm, dgi);
                    crate::math::axpy(&mut f_mix, -gm, dfi);
                }
                if opts.damping == 1.0 {
                    g_mix
                } else {
                    g_mix
                        .iter()
                        .zip(&f_mix)
                        .map(|(g, fm)| g - (1.0 - opts.damping) * fm)
                        .collect()
                }
            }
            None if opts.damping == 1.0 => gx.clone(),
            None => x.iter().zip(&f).map(|(xi, fi)| xi + opts.damping * fi).collect(),
        };
        if opts.memory > 0 {
            prev = Some((f.clone(), gx.clone()));
        }
        x = next;
        iterations += 1;
    }
}

/// Least-squares weights `argmin ‖f − ΔF γ‖² + λ‖γ‖²`; `None` when the
/// system is too ill-conditioned to trust.
fn mixing_weights(df: &VecDeque<Vec<f64>>, f: &[f64]) -> Option<Vec<f64>> {
    let k = df.len();
    let mut gram = Matrix::zeros(k, k);
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        for j in 0..=i {
            let v = dot(&df[i], &df[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
        rhs[i] = dot(&df[i], f);
    }
    let trace: f64 = (0..k).map(|i| gram[(i, i)]).sum();
    if !(trace > 0.0) || !trace.is_finite() {
        return None;
    }
    let lambda = 1e-10 * trace / k as f64;
    for i in 0..k {
        gram[(i, i)] += lambda;
    }
    let gamma = gram.lu().ok()?.solve(&rhs);
    if gamma.iter().all(|g| g.is_finite()) && norm_inf(&gamma) < 1e8 {
        Some(gamma)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_map_converges_in_one_step() {
        let res = fixed_point_solve(
            |_, out| {
                out.copy_from_slice(&[3.0, -2.0]);
                Ok(())
            },
            &[10.0, 10.0],
            &AndersonOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.y, vec![3.0, -2.0]);
    }

    #[test]
    fn affine_scalar_map() {
        for memory in [0, 5] {
            let opts = AndersonOptions {
                memory,
                ..Default::default()
            };
            let res = fixed_point_solve(
                |x, out| {
                    out[0] = 0.5 * x[0] + 1.0;
                    Ok(())
                },
                &[0.0],
                &opts,
            )
            .unwrap();
            assert!(res.converged);
            // |y − y*| ≤ residual / (1 − 0.5)
            assert!((res.y[0] - 2.0).abs() <= 2.0 * res.residual + 1e-15);
        }
    }

    #[test]
    fn zero_memory_is_plain_picard() {
        let map = |x: &[f64], out: &mut [f64]| {
            out[0] = libm::cos(x[0]);
            out[1] = 0.3 * x[0] + 0.2 * libm::sin(x[1]);
            Ok(())
        };
        let opts = AndersonOptions {
            memory: 0,
            max_iter: 25,
            tol: 0.0,
            ..Default::default()
        };
        let res = fixed_point_solve(map, &[0.5, 0.5], &opts).unwrap();
        let mut x = [0.5, 0.5];
        let mut out = [0.0; 2];
        for _ in 0..25 {
            map(&x, &mut out).unwrap();
            x = out;
        }
        assert_eq!(res.y, x.to_vec());
        assert_eq!(res.iterations, 25);
        assert!(!res.converged);
    }

    #[test]
    fn acceleration_reduces_iterations_on_slow_linear_map() {
        let n = 10;
        let map = move |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let neighbor = if i + 1 < n { x[i + 1] } else { 0.0 };
                out[i] = 0.95 * (0.6 * x[i] + 0.4 * neighbor) + 1.0;
            }
            Ok(())
        };
        let plain = fixed_point_solve(map, &vec![0.0; n], &AndersonOptions { memory: 0, ..Default::default() }).unwrap();
        let fast = fixed_point_solve(map, &vec![0.0; n], &AndersonOptions::default()).unwrap();
        assert!(plain.converged && fast.converged);
        assert!(fast.iterations < plain.iterations);
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let res = fixed_point_solve(
            |x, out| {
                out[0] = 2.0 * x[0] + 1.0;
                Ok(())
            },
            &[0.0],
            &AndersonOptions {
                memory: 0,
                max_iter: 10,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!res.converged);
    }
}
