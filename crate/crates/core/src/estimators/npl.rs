//! One nested pseudo-likelihood (NPL) step from estimated CCPs.
//!
//! Given CCPs `P`, the ex-ante values solve
//! `(I − β F_P) W_j = Σ_a P_j(a|x)[u_j(x, a; P_−j, θ) + γ_E − ln P_j(a|x)]`,
//! and the choice-specific values are
//! `Γ_j(θ, P)(x, a) = u_j(x, a) + β Σ_{x'} f_j(x'|x, a; P_−j) W_j(x')`.
//! Both are affine in `θ`.

use alloc::vec;
use alloc::vec::Vec;

use super::likelihood::{AffineLikelihood, AffineValues, ChoiceCounts};
use crate::error::{Error, Result};
use crate::game::model_internals::{entry_features, fold_firms, integrate_sizes};
use crate::game::{Ccps, GameConfig, Theta, ValueFunction};
use crate::math::ln;
use crate::numerics::{maximize_smooth, Matrix, MaximizeOptions};

/// CCPs are clipped to `[CCP_FLOOR, 1 − CCP_FLOOR]` before taking logs.
pub const CCP_FLOOR: f64 = 1e-9;

/// The affine maps `θ ↦ W_P(θ)` and `θ ↦ Γ(θ, P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NplMapping {
    /// Per firm, `|χ| × (K + 1)`: columns `0..K` are slopes, column `K` the offset.
    pub ex_ante: Vec<Matrix>,
    pub values: AffineValues,
    /// `I − β F_P`
    pub system: Matrix,
    /// Right-hand sides of the ex-ante value systems, same layout as `ex_ante`.
    pub rhs: Vec<Matrix>,
}

impl NplMapping {
    pub fn gamma(&self, theta: &[f64]) -> Vec<f64> {
        self.values.eval(theta)
    }
}

pub fn npl_mapping(cfg: &GameConfig, ccps: &Ccps) -> Result<NplMapping> {
    let p = ccps.clipped(CCP_FLOOR);
    let nf = cfg.n_firms;
    let nx = cfg.n_states();
    let k = cfg.n_params();
    let np = cfg.n_profiles();
    let ns = cfg.n_sizes;
    let euler = cfg.euler_term();

    let kernel = crate::data::state_kernel(cfg, &p);
    let mut system = Matrix::identity(nx);
    for (s, m) in system.as_mut_slice().iter_mut().zip(kernel.as_slice()) {
        *s -= cfg.beta * m;
    }
    let lu = system.lu()?;

    let mut p0 = vec![0.0; nf];
    let mut p1 = vec![0.0; nf];
    let local = |x: usize, p0: &mut [f64], p1: &mut [f64]| {
        for l in 0..nf {
            p0[l] = p.get(l, x, 0);
            p1[l] = p.get(l, x, 1);
        }
    };

    // Expected entry features per (j, x).
    let mut features = vec![[0.0; 3]; nf * nx];
    for x in 0..nx {
        local(x, &mut p0, &mut p1);
        for j in 0..nf {
            features[j * nx + x] = entry_features(cfg, &p0, &p1, j, x);
        }
    }

    let mut ex_ante = Vec::with_capacity(nf);
    let mut rhs_all = Vec::with_capacity(nf);
    for j in 0..nf {
        let mut rhs = Matrix::zeros(nx, k + 1);
        for x in 0..nx {
            let (q0, q1) = (p.get(j, x, 0), p.get(j, x, 1));
            let row = rhs.row_mut(x);
            row[j] = q1;
            for (c, f) in features[j * nx + x].iter().enumerate() {
                row[nf + c] = q1 * f;
            }
            row[k] = q0 * (euler - ln(q0)) + q1 * (euler - ln(q1));
        }
        ex_ante.push(lu.solve_matrix(&rhs)?);
        rhs_all.push(rhs);
    }

    let n_values = cfg.n_values();
    let mut offset = vec![0.0; n_values];
    let mut slope = Matrix::zeros(n_values, k);
    let mut work = vec![0.0; np];
    for col in 0..=k {
        let table: Vec<f64> = (0..nf)
            .flat_map(|j| (0..nx).map(move |x| (j, x)))
            .map(|(j, x)| ex_ante[j][(x, col)])
            .collect();
        let wbar = integrate_sizes(cfg, &table);
        for x in 0..nx {
            local(x, &mut p0, &mut p1);
            let s = cfg.size_of(x) - 1;
            for j in 0..nf {
                work.copy_from_slice(&wbar[(j * ns + s) * np..(j * ns + s + 1) * np]);
                fold_firms(&mut work, &p0, &p1, 1 << j);
                let cont = [cfg.beta * work[0], cfg.beta * work[1 << j]];
                let i = cfg.value_index(j, x, 0);
                if col == k {
                    offset[i] = cont[0];
                    offset[i + 1] = cont[1];
                } else {
                    let flow = if col == j {
                        1.0
                    } else if col >= nf {
                        features[j * nx + x][col - nf]
                    } else {
                        0.0
                    };
                    slope[(i, col)] = cont[0];
                    slope[(i + 1, col)] = flow + cont[1];
                }
            }
        }
    }
    Ok(NplMapping {
        ex_ante,
        values: AffineValues { offset, slope },
        system,
        rhs: rhs_all,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NplStep {
    pub theta: Theta,
    /// `Γ(θ̂, P)`
    pub v: ValueFunction,
    pub loglik: f64,
}

/// Maximizes the pseudo-likelihood at `Λ(Γ(θ, P))` over `θ`, starting from zero.
pub fn npl_one_step(counts: &ChoiceCounts, ccps: &Ccps, cfg: &GameConfig) -> Result<NplStep> {
    let mapping = npl_mapping(cfg, ccps)?;
    let mut obj = AffineLikelihood::new(counts, &mapping.values)?;
    let res = maximize_smooth(&mut obj, &vec![0.0; cfg.n_params()], &MaximizeOptions::default())?;
    if !res.converged {
        return Err(Error::Optimizer(alloc::format!(
            "NPL pseudo-likelihood maximization stopped with gradient {:e}",
            res.gradient_norm()
        )));
    }
    let v = ValueFunction::from_flat(cfg, mapping.gamma(&res.x))?;
    Ok(NplStep {
        theta: Theta::from_slice(cfg.n_firms, &res.x)?,
        v,
        loglik: res.value,
    })
}
