use alloc::vec;
use alloc::vec::Vec;

use super::{Ccps, GameConfig, LinearDecomposition, State, Theta, ValueFunction, N_ACTIONS};
use crate::error::{Error, Result};
use crate::math::{ln_1p, logit_pair, logsumexp};
use crate::numerics::Matrix;

/// Logit choice probabilities `Λ(v)`, one softmax per `(j, x)` row.
pub fn choice_probs(v: &ValueFunction) -> Result<Ccps> {
    if !crate::math::all_finite(v.as_slice()) {
        return Err(Error::invalid("value function has non-finite entries"));
    }
    let mut probs = Vec::with_capacity(v.as_slice().len());
    for row in v.as_slice().chunks_exact(N_ACTIONS) {
        let (p0, p1) = logit_pair(row[0], row[1]);
        probs.push(p0);
        probs.push(p1);
    }
    Ok(Ccps::from_flat_unchecked(v.n_firms(), v.n_states(), probs))
}

/// McFadden surplus `ln Σ_a exp v_a`, plus Euler's constant when requested.
pub fn surplus(v_row: &[f64], include_euler: bool) -> f64 {
    logsumexp(v_row) + if include_euler { crate::math::EULER_GAMMA } else { 0.0 }
}

/// Flow-utility features `h(x, a_j, a_−j)` with `ū_j = h·θ`.
///
/// `profile` is the current action profile as a bit mask; only rival bits are
/// read. Entering firms get `(e_j, s, −ln(1 + #active rivals), −(1 − a_prev_j))`.
pub fn flow_utility_features(cfg: &GameConfig, state: &State, firm: usize, action: u8, profile: u32) -> Vec<f64> {
    let mut h = vec![0.0; cfg.n_params()];
    if action == 1 {
        let rivals = (profile & !(1 << firm)).count_ones();
        let j = cfg.n_firms;
        h[firm] = 1.0;
        h[j] = state.s as f64;
        h[j + 1] = -ln_1p(f64::from(rivals));
        h[j + 2] = -f64::from(1 - state.a_prev_of(firm));
    }
    h
}

/// Per-state quantities derived from `v`: entry/exit probabilities and the
/// size-integrated continuation surplus.
pub(crate) struct Expectations {
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
    /// `Σ_{s'} f_s(s'|s)·S(v_j(s', profile))`, indexed `(j·|S| + s)·2^J + profile`.
    pub sbar: Vec<f64>,
}

impl Expectations {
    pub fn from_values(cfg: &GameConfig, v: &[f64]) -> Self {
        let nx = cfg.n_states();
        let n = cfg.n_firms * nx;
        let mut p0 = vec![0.0; n];
        let mut p1 = vec![0.0; n];
        let mut surplus_tab = vec![0.0; n];
        let euler = cfg.euler_term();
        for (i, row) in v.chunks_exact(N_ACTIONS).enumerate() {
            let (q0, q1) = logit_pair(row[0], row[1]);
            p0[i] = q0;
            p1[i] = q1;
            surplus_tab[i] = logsumexp(row) + euler;
        }
        let sbar = integrate_sizes(cfg, &surplus_tab);
        Expectations { p0, p1, sbar }
    }

    pub fn from_ccps(cfg: &GameConfig, ccps: &Ccps) -> Self {
        let n = cfg.n_firms * cfg.n_states();
        let probs = ccps.as_slice();
        let p0 = (0..n).map(|i| probs[2 * i]).collect();
        let p1 = (0..n).map(|i| probs[2 * i + 1]).collect();
        Expectations {
            p0,
            p1,
            sbar: Vec::new(),
        }
    }

    /// Probabilities of all firms at state `x`, as `(p0, p1)` slices per firm.
    pub fn local(&self, cfg: &GameConfig, x: usize, p0: &mut [f64], p1: &mut [f64]) {
        let nx = cfg.n_states();
        for l in 0..cfg.n_firms {
            p0[l] = self.p0[l * nx + x];
            p1[l] = self.p1[l * nx + x];
        }
    }
}

/// `out[(j·|S| + s)·2^J + profile] = Σ_{s'} f_s(s'|s)·table[j·|χ| + (s', profile)]`.
pub(crate) fn integrate_sizes(cfg: &GameConfig, table: &[f64]) -> Vec<f64> {
    let ns = cfg.n_sizes;
    let np = cfg.n_profiles();
    let nx = cfg.n_states();
    let mut out = vec![0.0; cfg.n_firms * ns * np];
    for j in 0..cfg.n_firms {
        for s in 0..ns {
            let dst = &mut out[(j * ns + s) * np..(j * ns + s + 1) * np];
            for s2 in 0..ns {
                let f = cfg.size_prob(s, s2);
                if f == 0.0 {
                    continue;
                }
                let src = &table[j * nx + s2 * np..j * nx + (s2 + 1) * np];
                crate::math::axpy(dst, f, src);
            }
        }
    }
    out
}

/// Takes expectations over the actions of every firm not in `keep` in a table
/// indexed by action profile. Afterwards the entries whose folded bits are all
/// zero hold the conditional expectations; other entries are stale.
#[inline]
pub(crate) fn fold_firms(work: &mut [f64], p0: &[f64], p1: &[f64], keep: u32) {
    let n_firms = p0.len();
    let np = work.len();
    for l in 0..n_firms {
        let bit = 1usize << l;
        if keep & (bit as u32) != 0 {
            continue;
        }
        let (q0, q1) = (p0[l], p1[l]);
        for idx in 0..np {
            if idx & bit == 0 {
                work[idx] = q0 * work[idx] + q1 * work[idx | bit];
            }
        }
    }
}

/// `E[ln(1 + #active rivals of j)]` under independent rival entry.
pub(crate) fn expected_log_rivals(p0: &[f64], p1: &[f64], firm: usize) -> f64 {
    let n = p0.len();
    let mut dist = [0.0f64; super::MAX_FIRMS + 1];
    dist[0] = 1.0;
    let mut count = 0;
    for l in (0..n).filter(|&l| l != firm) {
        count += 1;
        for k in (0..=count).rev() {
            let stay = dist[k] * p0[l];
            let from_below = if k > 0 { dist[k - 1] * p1[l] } else { 0.0 };
            dist[k] = stay + from_below;
        }
    }
    (1..=count).map(|k| dist[k] * ln_1p(k as f64)).sum()
}

/// Expected entry features `(s, −E ln(1 + #rivals), −(1 − a_prev_j))` at
/// `(j, x)`; the fixed-effect feature is 1 in column `j`.
#[inline]
pub(crate) fn entry_features(cfg: &GameConfig, p0: &[f64], p1: &[f64], firm: usize, x: usize) -> [f64; 3] {
    let lagged = cfg.lagged_of(x);
    [
        cfg.size_of(x) as f64,
        -expected_log_rivals(p0, p1, firm),
        -f64::from(1 - ((lagged >> firm) & 1)),
    ]
}

/// Expected features `E[h(x, a_j, a_−j)]` over rival actions drawn from `ccps`.
pub fn expected_features(cfg: &GameConfig, ccps: &Ccps, firm: usize, x: usize, action: usize) -> Vec<f64> {
    let mut h = vec![0.0; cfg.n_params()];
    if action == 1 {
        let e = Expectations::from_ccps(cfg, ccps);
        let mut p0 = vec![0.0; cfg.n_firms];
        let mut p1 = vec![0.0; cfg.n_firms];
        e.local(cfg, x, &mut p0, &mut p1);
        let f = entry_features(cfg, &p0, &p1, firm, x);
        h[firm] = 1.0;
        h[cfg.n_firms..].copy_from_slice(&f);
    }
    h
}

/// Rival-expected flow utility `u_j(x, a; Λ_−j(v_−j), θ)`.
pub fn expected_utility(cfg: &GameConfig, v: &ValueFunction, theta: &Theta, firm: usize, x: usize, action: usize) -> Result<f64> {
    let ccps = choice_probs(v)?;
    let h = expected_features(cfg, &ccps, firm, x, action);
    Ok(crate::math::dot(&h, &theta.to_vec()))
}

/// Next-state distribution `f_j(x' | x, a_j; Λ_−j(v_−j))` over all `|χ|` states.
pub fn transition_probs(cfg: &GameConfig, v: &ValueFunction, firm: usize, x: usize, action: usize) -> Result<Vec<f64>> {
    let e = Expectations::from_values(cfg, v.as_slice());
    let mut p0 = vec![0.0; cfg.n_firms];
    let mut p1 = vec![0.0; cfg.n_firms];
    e.local(cfg, x, &mut p0, &mut p1);
    let np = cfg.n_profiles();
    let s = cfg.size_of(x) - 1;
    let mut out = vec![0.0; cfg.n_states()];
    for profile in 0..np {
        if (profile >> firm) & 1 != action {
            continue;
        }
        let w: f64 = (0..cfg.n_firms)
            .filter(|&l| l != firm)
            .map(|l| if (profile >> l) & 1 == 1 { p1[l] } else { p0[l] })
            .product();
        for s2 in 0..cfg.n_sizes {
            out[s2 * np + profile] += cfg.size_prob(s, s2) * w;
        }
    }
    Ok(out)
}

/// Writes `Φ(θ, v)` into `out`. `theta` is in vector order.
pub fn phi_into(cfg: &GameConfig, theta: &[f64], v: &[f64], out: &mut [f64]) {
    let e = Expectations::from_values(cfg, v);
    let j_n = cfg.n_firms;
    let np = cfg.n_profiles();
    let ns = cfg.n_sizes;
    let beta = cfg.beta;
    let mut p0 = vec![0.0; j_n];
    let mut p1 = vec![0.0; j_n];
    let mut work = vec![0.0; np];
    for x in 0..cfg.n_states() {
        e.local(cfg, x, &mut p0, &mut p1);
        let s = cfg.size_of(x) - 1;
        for j in 0..j_n {
            let keep = 1u32 << j;
            work.copy_from_slice(&e.sbar[(j * ns + s) * np..(j * ns + s + 1) * np]);
            fold_firms(&mut work, &p0, &p1, keep);
            let [fs, frn, fec] = entry_features(cfg, &p0, &p1, j, x);
            let flow = theta[j] + theta[j_n] * fs + theta[j_n + 1] * frn + theta[j_n + 2] * fec;
            let i = cfg.value_index(j, x, 0);
            out[i] = beta * work[0];
            out[i + 1] = flow + beta * work[1 << j];
        }
    }
}

/// `Φ(θ, v)[j][x][a] = u_j(x, a) + β Σ_{x'} f_j(x'|x, a) S(v_j(x'))`.
pub fn phi(cfg: &GameConfig, theta: &Theta, v: &ValueFunction) -> Result<ValueFunction> {
    check_dims(cfg, theta, v)?;
    let mut out = vec![0.0; cfg.n_values()];
    phi_into(cfg, &theta.to_vec(), v.as_slice(), &mut out);
    ValueFunction::from_flat(cfg, out)
}

/// Writes `G(θ, v) = v − Φ(θ, v)` into `out`.
pub fn constraint_g_into(cfg: &GameConfig, theta: &[f64], v: &[f64], out: &mut [f64]) {
    phi_into(cfg, theta, v, out);
    for (o, vi) in out.iter_mut().zip(v) {
        *o = vi - *o;
    }
}

pub fn constraint_g(cfg: &GameConfig, theta: &Theta, v: &ValueFunction) -> Result<Vec<f64>> {
    check_dims(cfg, theta, v)?;
    let mut out = vec![0.0; cfg.n_values()];
    constraint_g_into(cfg, &theta.to_vec(), v.as_slice(), &mut out);
    Ok(out)
}

/// `H(v)` and `z(v)` with `G(θ, v) = H(v)θ + z(v)` for every `θ`.
pub fn build_h_z(cfg: &GameConfig, v: &ValueFunction) -> Result<LinearDecomposition> {
    if v.as_slice().len() != cfg.n_values() {
        return Err(Error::DimensionMismatch {
            what: "value function",
            expected: cfg.n_values(),
            found: v.as_slice().len(),
        });
    }
    if !crate::math::all_finite(v.as_slice()) {
        return Err(Error::invalid("value function has non-finite entries"));
    }
    let values = v.as_slice();
    let e = Expectations::from_values(cfg, values);
    let j_n = cfg.n_firms;
    let np = cfg.n_profiles();
    let ns = cfg.n_sizes;
    let mut h = Matrix::zeros(cfg.n_values(), cfg.n_params());
    let mut z = vec![0.0; cfg.n_values()];
    let mut p0 = vec![0.0; j_n];
    let mut p1 = vec![0.0; j_n];
    let mut work = vec![0.0; np];
    for x in 0..cfg.n_states() {
        e.local(cfg, x, &mut p0, &mut p1);
        let s = cfg.size_of(x) - 1;
        for j in 0..j_n {
            work.copy_from_slice(&e.sbar[(j * ns + s) * np..(j * ns + s + 1) * np]);
            fold_firms(&mut work, &p0, &p1, 1 << j);
            let i = cfg.value_index(j, x, 0);
            z[i] = values[i] - cfg.beta * work[0];
            z[i + 1] = values[i + 1] - cfg.beta * work[1 << j];
            let f = entry_features(cfg, &p0, &p1, j, x);
            let row = h.row_mut(i + 1);
            row[j] = -1.0;
            for (k, fk) in f.iter().enumerate() {
                row[j_n + k] = -fk;
            }
        }
    }
    Ok(LinearDecomposition { h, z })
}

pub(crate) fn check_dims(cfg: &GameConfig, theta: &Theta, v: &ValueFunction) -> Result<()> {
    if theta.n_firms() != cfg.n_firms {
        return Err(Error::DimensionMismatch {
            what: "theta fixed effects",
            expected: cfg.n_firms,
            found: theta.n_firms(),
        });
    }
    if v.as_slice().len() != cfg.n_values() {
        return Err(Error::DimensionMismatch {
            what: "value function",
            expected: cfg.n_values(),
            found: v.as_slice().len(),
        });
    }
    Ok(())
}
