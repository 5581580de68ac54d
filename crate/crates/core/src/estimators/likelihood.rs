//! Logit pseudo-likelihood `Q_N = (1/N) Σ_i Σ_j ln Λ_j(x_i, a_ij; v)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::game::GameConfig;
use crate::math::{logit_pair, logsumexp};
use crate::numerics::{Matrix, SmoothObjective};

/// Action counts for every visited `(firm, state)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceCounts {
    n_obs: usize,
    n_values: usize,
    rows: Vec<CountRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CountRow {
    /// Flat index of `v[j][x][0]`.
    index: usize,
    n0: f64,
    n1: f64,
}

impl ChoiceCounts {
    pub fn from_dataset(cfg: &GameConfig, ds: &Dataset) -> Result<Self> {
        ds.validate(cfg)?;
        let mut counts = vec![0.0; cfg.n_values()];
        for o in &ds.observations {
            for j in 0..cfg.n_firms {
                let a = o.action(j) as usize;
                counts[cfg.value_index(j, o.x, a)] += 1.0;
            }
        }
        let rows = counts
            .chunks_exact(2)
            .enumerate()
            .filter(|(_, c)| c[0] + c[1] > 0.0)
            .map(|(i, c)| CountRow {
                index: 2 * i,
                n0: c[0],
                n1: c[1],
            })
            .collect();
        Ok(ChoiceCounts {
            n_obs: ds.len(),
            n_values: cfg.n_values(),
            rows,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// Number of visited `(firm, state)` pairs.
    pub fn n_cells(&self) -> usize {
        self.rows.len()
    }
}

/// `Q_N` at a given value vector.
pub fn loglik_at_values(counts: &ChoiceCounts, v: &[f64]) -> Result<f64> {
    if v.len() != counts.n_values {
        return Err(Error::DimensionMismatch {
            what: "value vector",
            expected: counts.n_values,
            found: v.len(),
        });
    }
    let mut total = 0.0;
    for r in &counts.rows {
        let (v0, v1) = (v[r.index], v[r.index + 1]);
        total += r.n0 * v0 + r.n1 * v1 - (r.n0 + r.n1) * logsumexp(&[v0, v1]);
    }
    Ok(total / counts.n_obs as f64)
}

/// Values affine in the parameters: `v(θ) = offset + slope·θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineValues {
    pub offset: Vec<f64>,
    /// `|Y| × K`
    pub slope: Matrix,
}

impl AffineValues {
    pub fn eval(&self, theta: &[f64]) -> Vec<f64> {
        let mut v = self.slope.mul_vec(theta);
        crate::math::axpy(&mut v, 1.0, &self.offset);
        v
    }

    pub fn n_params(&self) -> usize {
        self.slope.cols()
    }
}

/// `Q_N(θ)` at `v(θ)` from an affine value map, with its analytic gradient.
///
/// Only visited cells are evaluated, so each call costs
/// `O(#cells · K)` regardless of `|Y|`.
pub struct AffineLikelihood<'a> {
    counts: &'a ChoiceCounts,
    k: usize,
    /// Per visited cell: offsets `(o0, o1)` and slope rows (2K entries).
    offsets: Vec<[f64; 2]>,
    slopes: Vec<f64>,
}

impl<'a> AffineLikelihood<'a> {
    pub fn new(counts: &'a ChoiceCounts, values: &AffineValues) -> Result<Self> {
        if values.offset.len() != counts.n_values || values.slope.rows() != counts.n_values {
            return Err(Error::DimensionMismatch {
                what: "affine value map",
                expected: counts.n_values,
                found: values.offset.len(),
            });
        }
        let k = values.n_params();
        let mut offsets = Vec::with_capacity(counts.rows.len());
        let mut slopes = Vec::with_capacity(counts.rows.len() * 2 * k);
        for r in &counts.rows {
            offsets.push([values.offset[r.index], values.offset[r.index + 1]]);
            slopes.extend_from_slice(values.slope.row(r.index));
            slopes.extend_from_slice(values.slope.row(r.index + 1));
        }
        Ok(AffineLikelihood {
            counts,
            k,
            offsets,
            slopes,
        })
    }

    /// Value and (optionally) gradient at `theta`.
    pub fn evaluate(&self, theta: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let k = self.k;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
        let mut total = 0.0;
        for (i, r) in self.counts.rows.iter().enumerate() {
            let s0 = &self.slopes[2 * i * k..(2 * i + 1) * k];
            let s1 = &self.slopes[(2 * i + 1) * k..(2 * i + 2) * k];
            let v0 = self.offsets[i][0] + crate::math::dot(s0, theta);
            let v1 = self.offsets[i][1] + crate::math::dot(s1, theta);
            let n = r.n0 + r.n1;
            total += r.n0 * v0 + r.n1 * v1 - n * logsumexp(&[v0, v1]);
            if let Some(g) = grad.as_deref_mut() {
                let (p0, p1) = logit_pair(v0, v1);
                let (w0, w1) = (r.n0 - n * p0, r.n1 - n * p1);
                for ((gk, a), b) in g.iter_mut().zip(s0).zip(s1) {
                    *gk += w0 * a + w1 * b;
                }
            }
        }
        let scale = 1.0 / self.counts.n_obs as f64;
        if let Some(g) = grad {
            g.iter_mut().for_each(|x| *x *= scale);
        }
        total * scale
    }
}

impl SmoothObjective for AffineLikelihood<'_> {
    fn value(&mut self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(x, None))
    }

    fn gradient(&mut self, x: &[f64], grad: &mut [f64]) -> Result<()> {
        self.evaluate(x, Some(grad));
        Ok(())
    }
}
