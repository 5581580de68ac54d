//! Nested fixed point (NFXP) maximum likelihood with a Jacobian-free inner
//! loop and central-difference outer gradients.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::epl::{EstimateResult, StageTimings};
use super::likelihood::{loglik_at_values, ChoiceCounts};
use crate::data::{equilibrium_options, solve_equilibrium_with, Dataset};
use crate::error::Result;
use crate::game::{GameConfig, Theta, ValueFunction};
use crate::numerics::{central_difference_gradient, maximize_smooth, AndersonOptions, MaximizeOptions, SmoothObjective};
use crate::timing::Stopwatch;

#[derive(Debug, Clone, PartialEq)]
pub struct NfxpOptions {
    pub inner: AndersonOptions,
    pub outer: MaximizeOptions,
}

impl Default for NfxpOptions {
    fn default() -> Self {
        NfxpOptions {
            inner: equilibrium_options(),
            outer: MaximizeOptions {
                tol_grad: 1e-6,
                max_iter: 500,
                max_step: 2.0,
                f_noise: 1e-11,
            },
        }
    }
}

/// `θ ↦ Q_N(θ, v*(θ))` with the inner solve warm-started from the last
/// solution at an accepted evaluation point.
struct NestedLikelihood<'a> {
    cfg: &'a GameConfig,
    counts: &'a ChoiceCounts,
    inner: &'a AndersonOptions,
    warm: ValueFunction,
    inner_solves: usize,
}

impl NestedLikelihood<'_> {
    fn solve(&mut self, x: &[f64]) -> Result<ValueFunction> {
        let theta = Theta::from_slice(self.cfg.n_firms, x)?;
        self.inner_solves += 1;
        solve_equilibrium_with(self.cfg, &theta, &self.warm, self.inner)
    }
}

impl SmoothObjective for NestedLikelihood<'_> {
    fn value(&mut self, x: &[f64]) -> Result<f64> {
        let v = self.solve(x)?;
        let q = loglik_at_values(self.counts, v.as_slice())?;
        self.warm = v;
        Ok(q)
    }

    fn gradient(&mut self, x: &[f64], grad: &mut [f64]) -> Result<()> {
        central_difference_gradient(
            |p| {
                let v = self.solve(p)?;
                loglik_at_values(self.counts, v.as_slice())
            },
            x,
            grad,
        )
    }
}

/// Maximizes the full-solution likelihood from `theta0`, with the first
/// inner solve started at `v0`.
///
/// An inner-loop failure at any trial `θ` is returned as
/// [`Error::Equilibrium`](crate::Error::Equilibrium) carrying that `θ`.
pub fn nfxp_estimate(
    cfg: &GameConfig,
    ds: &Dataset,
    theta0: &Theta,
    v0: &ValueFunction,
    opts: &NfxpOptions,
) -> Result<EstimateResult> {
    let total = Stopwatch::start();
    let counts = ChoiceCounts::from_dataset(cfg, ds)?;
    nfxp_estimate_counts(cfg, &counts, theta0, v0, opts, total)
}

pub(crate) fn nfxp_estimate_counts(
    cfg: &GameConfig,
    counts: &ChoiceCounts,
    theta0: &Theta,
    v0: &ValueFunction,
    opts: &NfxpOptions,
    total: Stopwatch,
) -> Result<EstimateResult> {
    crate::game::check_dims(cfg, theta0, v0)?;
    let init = total.elapsed_secs();
    let mut obj = NestedLikelihood {
        cfg,
        counts,
        inner: &opts.inner,
        warm: v0.clone(),
        inner_solves: 0,
    };
    let sw = Stopwatch::start();
    let res = maximize_smooth(&mut obj, &theta0.to_vec(), &opts.outer)?;
    let outer = sw.elapsed_secs();

    // Values at the reported estimate, from the last accepted solution.
    let v = obj.solve(&res.x)?;
    let loglik = loglik_at_values(counts, v.as_slice())?;
    let message: Option<String> = if res.converged {
        None
    } else {
        Some(format!(
            "outer loop stopped ({}) with gradient {:e}",
            res.message.as_deref().unwrap_or("unknown"),
            res.gradient_norm()
        ))
    };
    let theta = Theta::from_slice(cfg.n_firms, &res.x)?;
    Ok(EstimateResult {
        method: String::from("nfxp-jf"),
        theta_trace: Vec::from([res.x]),
        theta,
        v,
        iterations: res.iterations,
        converged: res.converged,
        loglik,
        timings: StageTimings {
            init,
            linear: 0.0,
            theta: outer,
            total: total.elapsed_secs(),
        },
        step_trace: Vec::new(),
        gmres_iterations: 0,
        message,
    })
}
