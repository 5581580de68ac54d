//! Reduced-form logit choice probabilities used to start NPL.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::Result;
use crate::game::{Ccps, GameConfig};
use crate::math::{exp, ln_1p, logit_pair};
use crate::numerics::{maximize_smooth, MaximizeOptions, SmoothObjective};

/// Logit regressors for firm `j` at state `x`:
/// `(1, s, a_prev_j, Σ_{l≠j} a_prev_l)`.
pub fn logit_regressors(cfg: &GameConfig, firm: usize, x: usize) -> [f64; 4] {
    let lagged = cfg.lagged_of(x);
    let own = (lagged >> firm) & 1;
    [
        1.0,
        cfg.size_of(x) as f64,
        f64::from(own),
        f64::from(lagged.count_ones() - own),
    ]
}

/// Coefficients beyond this magnitude are treated as separation.
const SEPARATION_BOUND: f64 = 25.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CcpEstimate {
    pub ccps: Ccps,
    /// Fitted logit coefficients per firm; `None` where the frequency
    /// fallback was used.
    pub coefficients: Vec<Option<[f64; 4]>>,
    /// Firms (0-based) whose logit fit failed or separated.
    pub fallback_firms: Vec<usize>,
}

impl CcpEstimate {
    pub fn used_fallback(&self) -> bool {
        !self.fallback_firms.is_empty()
    }
}

/// Weighted binary logit over distinct regressor rows.
struct GroupedLogit {
    rows: Vec<([f64; 4], f64, f64)>,
    n_obs: f64,
}

impl SmoothObjective for GroupedLogit {
    fn value(&mut self, b: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (z, n, n1) in &self.rows {
            let eta = crate::math::dot(z, b);
            // n1·η − n·ln(1 + e^η), evaluated without overflow.
            let soft = if eta > 0.0 { eta + ln_1p(exp(-eta)) } else { ln_1p(exp(eta)) };
            total += n1 * eta - n * soft;
        }
        Ok(total / self.n_obs)
    }

    fn gradient(&mut self, b: &[f64], grad: &mut [f64]) -> Result<()> {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (z, n, n1) in &self.rows {
            let (_, p) = logit_pair(0.0, crate::math::dot(z, b));
            let w = (n1 - n * p) / self.n_obs;
            for (g, zk) in grad.iter_mut().zip(z) {
                *g += w * zk;
            }
        }
        Ok(())
    }
}

/// Fits one logit per firm on `(1, s, a_prev_j, Σ_{l≠j} a_prev_l)` and
/// evaluates it at every state. Firms whose fit separates fall back to
/// add-one smoothed state frequencies.
pub fn ccp_logit_init(ds: &Dataset, cfg: &GameConfig) -> Result<CcpEstimate> {
    ds.validate(cfg)?;
    let nx = cfg.n_states();
    let mut n_state = vec![0.0; nx];
    let mut n_enter = vec![0.0; cfg.n_firms * nx];
    for o in &ds.observations {
        n_state[o.x] += 1.0;
        for j in 0..cfg.n_firms {
            n_enter[j * nx + o.x] += f64::from(o.action(j));
        }
    }

    let mut entry = vec![0.0; cfg.n_firms * nx];
    let mut coefficients = Vec::with_capacity(cfg.n_firms);
    let mut fallback_firms = Vec::new();
    let opts = MaximizeOptions {
        tol_grad: 1e-8,
        max_step: 2.0,
        ..Default::default()
    };
    for j in 0..cfg.n_firms {
        let entries: f64 = n_enter[j * nx..(j + 1) * nx].iter().sum();
        let n = ds.len() as f64;
        let mut fit = None;
        if entries > 0.0 && entries < n {
            let rows = (0..nx)
                .filter(|&x| n_state[x] > 0.0)
                .map(|x| (logit_regressors(cfg, j, x), n_state[x], n_enter[j * nx + x]))
                .collect();
            let mut obj = GroupedLogit { rows, n_obs: n };
            let res = maximize_smooth(&mut obj, &[0.0; 4], &opts)?;
            if res.converged && res.x.iter().all(|b| b.abs() < SEPARATION_BOUND) {
                fit = Some([res.x[0], res.x[1], res.x[2], res.x[3]]);
            }
        }
        match fit {
            Some(b) => {
                for x in 0..nx {
                    let eta = crate::math::dot(&logit_regressors(cfg, j, x), &b);
                    entry[j * nx + x] = logit_pair(0.0, eta).1;
                }
            }
            None => {
                fallback_firms.push(j);
                for x in 0..nx {
                    entry[j * nx + x] = (n_enter[j * nx + x] + 1.0) / (n_state[x] + 2.0);
                }
            }
        }
        coefficients.push(fit);
    }
    Ok(CcpEstimate {
        ccps: Ccps::from_entry_probs(cfg, &entry)?,
        coefficients,
        fallback_firms,
    })
}
