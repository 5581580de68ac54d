//! The EPL iteration.
//!
//! Each outer iteration forms `D_H = (∇_Y G)⁻¹ H(Ŷ)` and `d_z = (∇_Y G)⁻¹ z(Ŷ)`
//! at the previous iterate, maximizes the pseudo-likelihood over `θ` at
//! `Υ(θ) = Ŷ − D_H θ − d_z`, and sets `Ŷ ← Υ(θ̂)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::likelihood::{loglik_at_values, AffineLikelihood, AffineValues, ChoiceCounts};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::game::{analytic_jacobian, build_h_z, constraint_g_into, GameConfig, Theta, ValueFunction};
use crate::math::max_abs_diff;
use crate::numerics::{
    gmres, maximize_smooth, CentralDifferenceOperator, GmresOptions, LinearOperator, Matrix, MaximizeOptions,
};
use crate::timing::Stopwatch;

/// How `(∇_Y G)⁻¹ [H | z]` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EplMode {
    /// Analytic Jacobian, dense LU.
    Analytic,
    /// Analytic Jacobian, GMRES with exact products.
    AnalyticKrylov,
    /// GMRES with central-difference Jacobian-vector products; the Jacobian
    /// is never formed.
    JacobianFree,
}

impl EplMode {
    pub fn name(&self) -> &'static str {
        match self {
            EplMode::Analytic => "epl-anal",
            EplMode::AnalyticKrylov => "epl-krylov",
            EplMode::JacobianFree => "epl-jf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EplOptions {
    pub mode: EplMode,
    /// `None` means `0.01 / K`.
    pub tol_theta: Option<f64>,
    /// `None` means `0.01 / K`.
    pub tol_y: Option<f64>,
    pub max_outer: usize,
    /// Run exactly this many outer iterations (k-EPL).
    pub k_fixed: Option<usize>,
    pub gmres: GmresOptions,
    /// Start each GMRES solve from the previous iteration's solution.
    pub warm_start: bool,
    /// Right-hand sides used for the last linear solve.
    pub rhs: RhsForm,
    pub theta_step: MaximizeOptions,
}

impl Default for EplOptions {
    fn default() -> Self {
        EplOptions {
            mode: EplMode::JacobianFree,
            tol_theta: None,
            tol_y: None,
            max_outer: 100,
            k_fixed: None,
            gmres: GmresOptions::default(),
            warm_start: false,
            rhs: RhsForm::Residual,
            theta_step: MaximizeOptions::default(),
        }
    }
}

impl EplOptions {
    pub fn with_mode(mode: EplMode) -> Self {
        EplOptions {
            mode,
            ..Default::default()
        }
    }

    fn tolerances(&self, k: usize) -> Result<(f64, f64)> {
        let default = 1e-2 / k as f64;
        let t = (self.tol_theta.unwrap_or(default), self.tol_y.unwrap_or(default));
        if !(t.0 > 0.0 && t.1 > 0.0) {
            return Err(Error::invalid("EPL tolerances must be positive"));
        }
        Ok(t)
    }
}

/// How the offset of `Υ(θ)` is obtained.
///
/// Both forms give the same `Υ` in exact arithmetic. With `Split` the last
/// solve is `∇_Y G · d_z = z(Ŷ)` and `Υ(θ) = Ŷ − D_H θ − d_z`; the two terms
/// are large and nearly cancel near convergence, so solver error in either
/// one survives in `Υ`. With `Residual` the last solve is
/// `∇_Y G · d_g = G(θ̂_prev, Ŷ) = H θ̂_prev + z` and
/// `Υ(θ) = Ŷ − d_g − D_H (θ − θ̂_prev)`, whose terms vanish at a fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RhsForm {
    Split,
    #[default]
    Residual,
}

/// `γ̂_k = (θ̂_k, Ŷ_k)`
#[derive(Debug, Clone, PartialEq)]
pub struct EplState {
    pub theta: Vec<f64>,
    pub y: Vec<f64>,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub init: f64,
    pub linear: f64,
    pub theta: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub method: String,
    pub theta: Theta,
    pub v: ValueFunction,
    pub iterations: usize,
    pub converged: bool,
    /// `Q_N` at the returned values.
    pub loglik: f64,
    pub timings: StageTimings,
    /// `θ̂_k` after every completed iteration.
    pub theta_trace: Vec<Vec<f64>>,
    /// `(‖Δθ‖∞, ‖ΔY‖∞)` per completed iteration.
    pub step_trace: Vec<(f64, f64)>,
    /// Total inner GMRES iterations (Krylov modes).
    pub gmres_iterations: usize,
    /// Failure description when `converged` is false.
    pub message: Option<String>,
}

/// `D_H = (∇_Y G)⁻¹ H` and `d_z = (∇_Y G)⁻¹ z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStep {
    /// `|Y| × K`
    pub d_h: Matrix,
    /// Solved directly (`Split`) or recovered as `d_g − D_H θ̂_prev` (`Residual`).
    pub d_z: Vec<f64>,
    /// `(θ̂_prev, d_g)` for the `Residual` form.
    pub anchor: Option<(Vec<f64>, Vec<f64>)>,
    /// GMRES iterations per column (empty for the direct solve).
    pub gmres_iterations: Vec<usize>,
}

impl LinearStep {
    /// Column `i` of `D_H` for `i < K`; for `i = K` the last solved column
    /// (`d_g` or `d_z`).
    pub fn column(&self, i: usize) -> Vec<f64> {
        if i < self.d_h.cols() {
            self.d_h.column(i)
        } else {
            match &self.anchor {
                Some((_, d_g)) => d_g.clone(),
                None => self.d_z.clone(),
            }
        }
    }

    /// The affine map `θ ↦ Υ(θ)` around `y_prev`.
    pub fn upsilon_map(&self, y_prev: &[f64]) -> AffineValues {
        let mut slope = self.d_h.clone();
        crate::math::scale(slope.as_mut_slice(), -1.0);
        let offset = match &self.anchor {
            Some((theta_prev, d_g)) => {
                let shift = self.d_h.mul_vec(theta_prev);
                y_prev
                    .iter()
                    .zip(d_g)
                    .zip(&shift)
                    .map(|((y, g), s)| (y - g) + s)
                    .collect()
            }
            None => y_prev.iter().zip(&self.d_z).map(|(y, d)| y - d).collect(),
        };
        AffineValues { offset, slope }
    }
}

/// Label of right-hand-side column `i` (`h_<param>` or `z`).
pub fn column_label(n_firms: usize, i: usize) -> String {
    let names = Theta::names(n_firms);
    match names.get(i) {
        Some(n) => format!("h_{n}"),
        None => String::from("z"),
    }
}

fn last_column_label(n_firms: usize, i: usize, form: RhsForm) -> String {
    if i == n_firms + 3 && form == RhsForm::Residual {
        String::from("g")
    } else {
        column_label(n_firms, i)
    }
}

/// Step 2(a): `(∇_Y G(θ, Y))⁻¹` applied to the columns of `H(Y)` and to
/// `z(Y)` or `G(θ, Y)` depending on `form`.
pub fn epl_linear_step(
    cfg: &GameConfig,
    theta: &Theta,
    y: &ValueFunction,
    mode: EplMode,
    form: RhsForm,
    gmres_opts: &GmresOptions,
    warm: Option<&LinearStep>,
) -> Result<LinearStep> {
    crate::game::check_dims(cfg, theta, y)?;
    let hz = build_h_z(cfg, y)?;
    let k = cfg.n_params();
    let th = theta.to_vec();
    let mut columns: Vec<Vec<f64>> = (0..k).map(|i| hz.h.column(i)).collect();
    columns.push(match form {
        RhsForm::Split => hz.z.clone(),
        RhsForm::Residual => {
            let mut g = vec![0.0; cfg.n_values()];
            constraint_g_into(cfg, &th, y.as_slice(), &mut g);
            g
        }
    });

    let (d_h, last, gmres_iterations) = match mode {
        EplMode::Analytic => {
            let jac = analytic_jacobian(cfg, theta, y)?.to_dense();
            let lu = jac.lu()?;
            let mut d_h = Matrix::zeros(cfg.n_values(), k);
            for (i, c) in columns.iter().enumerate().take(k) {
                d_h.set_column(i, &lu.solve(c))?;
            }
            (d_h, lu.solve(&columns[k]), Vec::new())
        }
        EplMode::AnalyticKrylov => {
            let jac = analytic_jacobian(cfg, theta, y)?;
            krylov_columns(cfg, &jac, &columns, form, gmres_opts, warm)?
        }
        EplMode::JacobianFree => {
            let op = CentralDifferenceOperator::new(
                |v: &[f64], out: &mut [f64]| {
                    constraint_g_into(cfg, &th, v, out);
                    Ok(())
                },
                y.as_slice().to_vec(),
            );
            krylov_columns(cfg, &op, &columns, form, gmres_opts, warm)?
        }
    };
    Ok(match form {
        RhsForm::Split => LinearStep {
            d_h,
            d_z: last,
            anchor: None,
            gmres_iterations,
        },
        RhsForm::Residual => {
            let shift = d_h.mul_vec(&th);
            let d_z = last.iter().zip(&shift).map(|(g, s)| g - s).collect();
            LinearStep {
                d_h,
                d_z,
                anchor: Some((th, last)),
                gmres_iterations,
            }
        }
    })
}

fn krylov_columns<A: LinearOperator + ?Sized>(
    cfg: &GameConfig,
    op: &A,
    columns: &[Vec<f64>],
    form: RhsForm,
    gmres_opts: &GmresOptions,
    warm: Option<&LinearStep>,
) -> Result<(Matrix, Vec<f64>, Vec<usize>)> {
    let k = cfg.n_params();
    let mut d_h = Matrix::zeros(cfg.n_values(), k);
    let mut last = Vec::new();
    let mut iterations = Vec::with_capacity(k + 1);
    for (i, b) in columns.iter().enumerate() {
        let mut opts = gmres_opts.clone();
        if let Some(w) = warm {
            opts.d0 = Some(w.column(i));
        }
        let res = gmres(op, b, &opts)?;
        if !res.converged {
            let b_norm = crate::math::norm2(b);
            return Err(Error::GmresNotConverged {
                column: last_column_label(cfg.n_firms, i, form),
                relative_residual: res.residual_norm / b_norm,
                iterations: res.iterations,
            });
        }
        iterations.push(res.iterations);
        if i < k {
            d_h.set_column(i, &res.d)?;
        } else {
            last = res.d;
        }
    }
    Ok((d_h, last, iterations))
}

/// `Υ(θ) = Y_prev − D_H θ − d_z`
pub fn upsilon(theta: &[f64], y_prev: &[f64], step: &LinearStep) -> Vec<f64> {
    step.upsilon_map(y_prev).eval(theta)
}

/// `Q_N(θ, Υ(θ))` and its gradient `−D_Hᵀ ∂Q/∂v`.
pub fn pseudo_loglik(theta: &[f64], y_prev: &[f64], step: &LinearStep, counts: &ChoiceCounts) -> Result<(f64, Vec<f64>)> {
    let map = step.upsilon_map(y_prev);
    let obj = AffineLikelihood::new(counts, &map)?;
    let mut grad = vec![0.0; theta.len()];
    let q = obj.evaluate(theta, Some(&mut grad));
    Ok((q, grad))
}

/// Runs EPL from `init = (θ₀, Y₀)`.
///
/// Numerical failures inside the loop end the run with `converged = false`
/// and a message; only invalid inputs return `Err`.
pub fn epl_estimate(cfg: &GameConfig, ds: &Dataset, init: (&Theta, &ValueFunction), opts: &EplOptions) -> Result<EstimateResult> {
    let total = Stopwatch::start();
    let counts = ChoiceCounts::from_dataset(cfg, ds)?;
    epl_estimate_counts(cfg, &counts, init, opts, total)
}

pub(crate) fn epl_estimate_counts(
    cfg: &GameConfig,
    counts: &ChoiceCounts,
    init: (&Theta, &ValueFunction),
    opts: &EplOptions,
    total: Stopwatch,
) -> Result<EstimateResult> {
    crate::game::check_dims(cfg, init.0, init.1)?;
    let k_params = cfg.n_params();
    let (tol_theta, tol_y) = opts.tolerances(k_params)?;
    if opts.k_fixed == Some(0) {
        return Err(Error::invalid("k_fixed must be at least 1"));
    }
    let max_k = opts.k_fixed.unwrap_or(opts.max_outer);

    let mut timings = StageTimings {
        init: total.elapsed_secs(),
        ..Default::default()
    };
    let mut state = EplState {
        theta: init.0.to_vec(),
        y: init.1.as_slice().to_vec(),
        k: 0,
    };
    let mut theta_trace = Vec::new();
    let mut step_trace = Vec::new();
    let mut gmres_total = 0;
    let mut warm: Option<LinearStep> = None;
    let mut failure: Option<String> = None;
    let mut converged = false;

    while state.k < max_k {
        let theta_prev = Theta::from_slice(cfg.n_firms, &state.theta)?;
        let y_prev = ValueFunction::from_flat(cfg, state.y.clone())?;

        let sw = Stopwatch::start();
        let step = epl_linear_step(
            cfg,
            &theta_prev,
            &y_prev,
            opts.mode,
            opts.rhs,
            &opts.gmres,
            if opts.warm_start { warm.as_ref() } else { None },
        );
        timings.linear += sw.elapsed_secs();
        let step = match step {
            Ok(s) => s,
            Err(e) => {
                failure = Some(format!("iteration {}: linear step failed: {e}", state.k + 1));
                break;
            }
        };
        gmres_total += step.gmres_iterations.iter().sum::<usize>();

        let sw = Stopwatch::start();
        let map = step.upsilon_map(&state.y);
        let mut obj = AffineLikelihood::new(counts, &map)?;
        let res = maximize_smooth(&mut obj, &state.theta, &opts.theta_step);
        timings.theta += sw.elapsed_secs();
        let res = match res {
            Ok(r) if r.converged => r,
            Ok(r) => {
                failure = Some(format!(
                    "iteration {}: theta step stopped ({}) with gradient {:e}",
                    state.k + 1,
                    r.message.as_deref().unwrap_or("unknown"),
                    r.gradient_norm()
                ));
                break;
            }
            Err(e) => {
                failure = Some(format!("iteration {}: theta step failed: {e}", state.k + 1));
                break;
            }
        };

        let y_new = map.eval(&res.x);
        let d_theta = max_abs_diff(&res.x, &state.theta);
        let d_y = max_abs_diff(&y_new, &state.y);
        state = EplState {
            theta: res.x,
            y: y_new,
            k: state.k + 1,
        };
        theta_trace.push(state.theta.clone());
        step_trace.push((d_theta, d_y));
        warm = Some(step);

        if opts.k_fixed.is_none() && d_theta <= tol_theta && d_y <= tol_y {
            converged = true;
            break;
        }
        if opts.k_fixed == Some(state.k) {
            converged = true;
            break;
        }
    }
    if !converged && failure.is_none() {
        failure = Some(format!("no convergence within {max_k} iterations"));
    }

    let loglik = loglik_at_values(counts, &state.y)?;
    timings.total = total.elapsed_secs();
    Ok(EstimateResult {
        method: String::from(opts.mode.name()),
        theta: Theta::from_slice(cfg.n_firms, &state.theta)?,
        v: ValueFunction::from_flat(cfg, state.y)?,
        iterations: state.k,
        converged,
        loglik,
        timings,
        theta_trace,
        step_trace,
        gmres_iterations: gmres_total,
        message: failure,
    })
}
