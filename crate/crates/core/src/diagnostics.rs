//! Forward error bound for the Jacobian-free linear step.
//!
//! For `J d* = b` solved approximately by GMRES on the finite-difference
//! operator `J̃`, with `ε_GMRES ≥ ‖b − J̃ d̃‖` and `ε_JVP ≥ ‖J̃ d̃ − J d̃‖`,
//!
//! ```text
//! ‖d* − d̃‖ / ‖d*‖ ≤ cond₂(J) · (ε_JVP + ε_GMRES) / ‖b‖.
//! ```
//!
//! The report forms the dense analytic Jacobian, so it is limited to
//! `|Y| ≤ DENSE_LIMIT`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimators::column_label;
use crate::game::{analytic_jacobian, build_h_z, check_dims, constraint_g_into, GameConfig, Theta, ValueFunction};
use crate::math::{norm2, scale};
use crate::numerics::{condition_number_2, gmres, CentralDifferenceOperator, GmresOptions, LinearOperator};

pub const DENSE_LIMIT: usize = 4096;

/// A right-hand side of the linear step: column `i` of `H(v)` or `z(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RhsColumn {
    H(usize),
    Z,
}

impl RhsColumn {
    /// Every column of `[H | z]` for a game with `n_params` parameters.
    pub fn all(n_params: usize) -> Vec<RhsColumn> {
        let mut v: Vec<RhsColumn> = (0..n_params).map(RhsColumn::H).collect();
        v.push(RhsColumn::Z);
        v
    }

    fn position(&self, n_params: usize) -> usize {
        match *self {
            RhsColumn::H(i) => i,
            RhsColumn::Z => n_params,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnBound {
    pub column: RhsColumn,
    pub label: alloc::string::String,
    pub b_norm: f64,
    pub eps_jvp: f64,
    pub eps_gmres: f64,
    /// `‖d* − d̃‖₂ / ‖d*‖₂`
    pub actual: f64,
    pub bound: f64,
    pub holds: bool,
    pub gmres_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBoundReport {
    pub cond: f64,
    /// Largest per-column `ε_JVP`.
    pub eps_jvp: f64,
    /// Largest per-column `ε_GMRES`.
    pub eps_gmres: f64,
    pub fd_step: f64,
    pub columns: Vec<ColumnBound>,
}

impl ErrorBoundReport {
    pub fn holds(&self) -> bool {
        self.columns.iter().all(|c| c.holds)
    }
}

impl fmt::Display for ErrorBoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cond = {:.6e}", self.cond)?;
        writeln!(f, "eps_jvp = {:.6e}", self.eps_jvp)?;
        writeln!(f, "eps_gmres = {:.6e}", self.eps_gmres)?;
        writeln!(f, "fd_step = {:.6e}", self.fd_step)?;
        writeln!(
            f,
            "{:<10} {:>12} {:>12} {:>12} {:>12} {:>12} {:>6}",
            "column", "norm_b", "eps_jvp", "eps_gmres", "actual", "bound", "holds"
        )?;
        for c in &self.columns {
            writeln!(
                f,
                "{:<10} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>6}",
                c.label, c.b_norm, c.eps_jvp, c.eps_gmres, c.actual, c.bound, c.holds
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBoundOptions {
    pub gmres: GmresOptions,
    /// Random probe directions used for `ε_JVP` in addition to `d̃` and `d*`.
    pub probes: usize,
    pub seed: u64,
}

impl Default for ErrorBoundOptions {
    fn default() -> Self {
        ErrorBoundOptions {
            gmres: GmresOptions::default(),
            probes: 8,
            seed: 0,
        }
    }
}

/// Compares the direct and Jacobian-free solutions of
/// `∇_Y G(θ, v) d = b` for each requested column `b` of `[H(v) | z(v)]`.
pub fn error_bound_report(
    cfg: &GameConfig,
    theta: &Theta,
    v: &ValueFunction,
    columns: &[RhsColumn],
    opts: &ErrorBoundOptions,
) -> Result<ErrorBoundReport> {
    check_dims(cfg, theta, v)?;
    let m = cfg.n_values();
    if m > DENSE_LIMIT {
        return Err(Error::TooLarge { size: m, limit: DENSE_LIMIT });
    }
    let k = cfg.n_params();
    if let Some(c) = columns.iter().find(|c| matches!(c, RhsColumn::H(i) if *i >= k)) {
        return Err(Error::invalid(alloc::format!("no right-hand side {c:?} for {k} parameters")));
    }

    let sparse = analytic_jacobian(cfg, theta, v)?;
    let dense = sparse.to_dense();
    let lu = dense.lu()?;
    let cond = condition_number_2(&dense, &lu);
    let hz = build_h_z(cfg, v)?;

    let th = theta.to_vec();
    let op = CentralDifferenceOperator::new(
        |y: &[f64], out: &mut [f64]| {
            constraint_g_into(cfg, &th, y, out);
            Ok(())
        },
        v.as_slice().to_vec(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut out = Vec::with_capacity(columns.len());
    let mut fd = vec![0.0; m];
    let mut exact = vec![0.0; m];
    for &column in columns {
        let b = hz.rhs_column(column.position(k));
        let b_norm = norm2(&b);
        let d_star = lu.solve(&b);
        let sol = gmres(&op, &b, &opts.gmres)?;
        let d_tilde = sol.d;

        op.apply(&d_tilde, &mut fd)?;
        let gmres_resid = norm2(&diff(&b, &fd));
        let eps_gmres = gmres_resid.max(opts.gmres.tol_rel * b_norm);

        let mut eps_jvp = 0.0f64;
        let scale_to = norm2(&d_tilde).max(f64::MIN_POSITIVE);
        let mut probes = vec![d_tilde.clone(), d_star.clone()];
        for _ in 0..opts.probes {
            let mut d: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = norm2(&d);
            scale(&mut d, scale_to / n);
            probes.push(d);
        }
        for d in &probes {
            op.apply(d, &mut fd)?;
            sparse.matvec(d, &mut exact);
            eps_jvp = eps_jvp.max(norm2(&diff(&fd, &exact)));
        }

        let d_star_norm = norm2(&d_star);
        let actual = if d_star_norm > 0.0 {
            norm2(&diff(&d_star, &d_tilde)) / d_star_norm
        } else {
            norm2(&d_tilde)
        };
        let bound = if b_norm > 0.0 {
            cond * (eps_jvp + eps_gmres) / b_norm
        } else {
            0.0
        };
        out.push(ColumnBound {
            column,
            label: column_label(cfg.n_firms, column.position(k)),
            b_norm,
            eps_jvp,
            eps_gmres,
            actual,
            bound,
            holds: actual <= bound,
            gmres_iterations: sol.iterations,
        });
    }

    Ok(ErrorBoundReport {
        cond,
        eps_jvp: out.iter().fold(0.0, |a, c| a.max(c.eps_jvp)),
        eps_gmres: out.iter().fold(0.0, |a, c| a.max(c.eps_gmres)),
        fd_step: op.step(),
        columns: out,
    })
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
