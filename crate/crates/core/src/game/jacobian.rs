//! Analytic Jacobian `∇_v G = I − ∇_v Φ` in block-sparse storage.
//!
//! `Φ_j(x, ·)` depends on firm `j`'s own values at every state through the
//! continuation surplus, and on a rival `l`'s values only at the same state
//! `x` through `Λ_l(x)`. Storage is therefore one dense `2|χ| × 2|χ|` block
//! per firm plus a `2 × 2` block per `(j, x, l ≠ j)`.

use alloc::vec;
use alloc::vec::Vec;

use super::model::{fold_firms, Expectations};
use super::{GameConfig, Theta, ValueFunction, N_ACTIONS};
use crate::error::{Error, Result};
use crate::math::ln_1p;
use crate::numerics::{LinearOperator, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseJacobian {
    n_firms: usize,
    n_states: usize,
    /// Own-firm blocks of `∇_v G`, one `2|χ| × 2|χ|` matrix per firm.
    own: Vec<Matrix>,
    /// Cross-firm same-state blocks, indexed `(j·|χ| + x)·J + l`, entries
    /// `[a·2 + ã]`; slots with `l = j` are unused.
    cross: Vec<[f64; 4]>,
}

impl SparseJacobian {
    pub fn dim(&self) -> usize {
        self.n_firms * self.n_states * N_ACTIONS
    }

    fn split(&self, index: usize) -> (usize, usize, usize) {
        let a = index % N_ACTIONS;
        let x = (index / N_ACTIONS) % self.n_states;
        let j = index / (N_ACTIONS * self.n_states);
        (j, x, a)
    }

    /// `true` when the entry is zero by the structure of the game.
    pub fn is_structural_zero(&self, row: usize, col: usize) -> bool {
        let (j, x, _) = self.split(row);
        let (l, xt, _) = self.split(col);
        l != j && x != xt
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (j, x, a) = self.split(row);
        let (l, xt, at) = self.split(col);
        if l == j {
            self.own[j][(x * N_ACTIONS + a, xt * N_ACTIONS + at)]
        } else if x == xt {
            self.cross[(j * self.n_states + x) * self.n_firms + l][a * 2 + at]
        } else {
            0.0
        }
    }

    /// Number of stored entries.
    pub fn stored_entries(&self) -> usize {
        let block = self.n_states * N_ACTIONS;
        self.n_firms * block * block + self.n_states * (self.n_firms * self.n_firms - self.n_firms) * 4
    }

    pub fn matvec(&self, d: &[f64], out: &mut [f64]) {
        let block = self.n_states * N_ACTIONS;
        let nf = self.n_firms;
        for j in 0..nf {
            let dst = &mut out[j * block..(j + 1) * block];
            self.own[j].matvec(&d[j * block..(j + 1) * block], dst);
            for x in 0..self.n_states {
                let base = (j * self.n_states + x) * nf;
                let (mut o0, mut o1) = (0.0, 0.0);
                for l in (0..nf).filter(|&l| l != j) {
                    let c = &self.cross[base + l];
                    let i = l * block + x * N_ACTIONS;
                    o0 += c[0] * d[i] + c[1] * d[i + 1];
                    o1 += c[2] * d[i] + c[3] * d[i + 1];
                }
                dst[x * N_ACTIONS] += o0;
                dst[x * N_ACTIONS + 1] += o1;
            }
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.dim();
        let block = self.n_states * N_ACTIONS;
        let mut m = Matrix::zeros(n, n);
        for j in 0..self.n_firms {
            for r in 0..block {
                let src = self.own[j].row(r);
                m.row_mut(j * block + r)[j * block..(j + 1) * block].copy_from_slice(src);
            }
            for x in 0..self.n_states {
                for l in (0..self.n_firms).filter(|&l| l != j) {
                    let c = self.cross[(j * self.n_states + x) * self.n_firms + l];
                    for a in 0..2 {
                        for at in 0..2 {
                            m[(j * block + x * 2 + a, l * block + x * 2 + at)] = c[a * 2 + at];
                        }
                    }
                }
            }
        }
        m
    }
}

impl LinearOperator for SparseJacobian {
    fn dim(&self) -> usize {
        SparseJacobian::dim(self)
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.matvec(x, out);
        Ok(())
    }
}

/// Assembles `∇_v G(θ, v)` analytically.
///
/// Own-firm entries: `δ − β f_j(x'|x, a)·Λ_j(x', a')`. Cross-firm entries at
/// the same state: `−Λ_l(x,ã)·(D_a(ã) − Σ_b Λ_l(x,b) D_a(b))`, where `D_a(b)` is
/// the expectation of flow utility plus discounted continuation conditional
/// on rival `l` playing `b`.
pub fn analytic_jacobian(cfg: &GameConfig, theta: &Theta, v: &ValueFunction) -> Result<SparseJacobian> {
    super::model::check_dims(cfg, theta, v)?;
    if !crate::math::all_finite(v.as_slice()) {
        return Err(Error::invalid("value function has non-finite entries"));
    }
    let th = theta.to_vec();
    let nf = cfg.n_firms;
    let nx = cfg.n_states();
    let ns = cfg.n_sizes;
    let np = cfg.n_profiles();
    let beta = cfg.beta;
    let block = nx * N_ACTIONS;
    let e = Expectations::from_values(cfg, v.as_slice());

    let mut own: Vec<Matrix> = (0..nf).map(|_| Matrix::identity(block)).collect();
    let mut cross = vec![[0.0; 4]; nf * nx * nf];

    let mut p0 = vec![0.0; nf];
    let mut p1 = vec![0.0; nf];
    let mut weights = vec![0.0; np];
    let mut psi = vec![0.0; np];
    let mut work = vec![0.0; np];
    let log_rivals: Vec<f64> = (0..=nf).map(|k| ln_1p(k as f64)).collect();

    for x in 0..nx {
        e.local(cfg, x, &mut p0, &mut p1);
        let s = cfg.size_of(x) - 1;
        let lagged = cfg.lagged_of(x);
        for j in 0..nf {
            // Own channel: probability of each next lagged profile, by rivals.
            for (profile, w) in weights.iter_mut().enumerate() {
                *w = (0..nf)
                    .filter(|&l| l != j)
                    .map(|l| if (profile >> l) & 1 == 1 { p1[l] } else { p0[l] })
                    .product();
            }
            let own_j = &mut own[j];
            for a in 0..N_ACTIONS {
                let row = own_j.row_mut(x * N_ACTIONS + a);
                for (profile, &w) in weights.iter().enumerate() {
                    if (profile >> j) & 1 != a || w == 0.0 {
                        continue;
                    }
                    for s2 in 0..ns {
                        let f = cfg.size_prob(s, s2);
                        if f == 0.0 {
                            continue;
                        }
                        let x2 = s2 * np + profile;
                        let c = beta * f * w;
                        row[x2 * N_ACTIONS] -= c * e.p0[j * nx + x2];
                        row[x2 * N_ACTIONS + 1] -= c * e.p1[j * nx + x2];
                    }
                }
            }

            // Cross channel through rivals' same-state choice probabilities.
            if nf == 1 {
                continue;
            }
            let flow_base = th[j] + th[nf] * (s + 1) as f64 - th[nf + 2] * f64::from(1 - ((lagged >> j) & 1));
            let sbar = &e.sbar[(j * ns + s) * np..(j * ns + s + 1) * np];
            for (profile, p) in psi.iter_mut().enumerate() {
                let cont = beta * sbar[profile];
                *p = if (profile >> j) & 1 == 1 {
                    let rivals = (profile & !(1 << j)).count_ones() as usize;
                    flow_base - th[nf + 1] * log_rivals[rivals] + cont
                } else {
                    cont
                };
            }
            for l in (0..nf).filter(|&l| l != j) {
                work.copy_from_slice(&psi);
                fold_firms(&mut work, &p0, &p1, (1 << j) | (1 << l));
                let q = p0[l] * p1[l];
                let c = &mut cross[(j * nx + x) * nf + l];
                for a in 0..N_ACTIONS {
                    let d0 = work[a << j];
                    let d1 = work[(a << j) | (1 << l)];
                    let dphi = q * (d1 - d0);
                    c[a * 2 + 1] = -dphi;
                    c[a * 2] = dphi;
                }
            }
        }
    }
    Ok(SparseJacobian {
        n_firms: nf,
        n_states: nx,
        own,
        cross,
    })
}
