//! Equilibrium solving and synthetic cross-sections.
//!
//! Datasets are i.i.d. draws of the state from the ergodic distribution of the
//! equilibrium state kernel, followed by independent action draws from each
//! firm's equilibrium choice probabilities. Sampling uses ChaCha8 seeded with
//! the 64-bit seed, so identical inputs give identical datasets.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::hash::Hasher;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{choice_probs, phi_into, Ccps, GameConfig, State, Theta, ValueFunction};
use crate::numerics::{fixed_point_solve, AndersonOptions, Matrix};

/// One market observation `w_i = (x_i, a_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    /// State index.
    pub x: usize,
    /// Current actions as a bit mask, bit `j` for firm `j` (0-based).
    pub actions: u32,
}

impl Observation {
    pub fn new(cfg: &GameConfig, state: State, actions: &[u8]) -> Result<Self> {
        if actions.len() != cfg.n_firms {
            return Err(Error::DimensionMismatch {
                what: "observation actions",
                expected: cfg.n_firms,
                found: actions.len(),
            });
        }
        if actions.iter().any(|&a| a > 1) {
            return Err(Error::invalid("actions must be 0 or 1"));
        }
        Ok(Observation {
            x: state.index(cfg)?,
            actions: State::new(1, actions).a_prev,
        })
    }

    pub fn action(&self, firm: usize) -> u8 {
        ((self.actions >> firm) & 1) as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_firms: usize,
    pub n_sizes: usize,
    pub observations: Vec<Observation>,
    pub seed: Option<u64>,
    /// Hash of the generating configuration and parameters.
    pub fingerprint: Option<u64>,
    pub theta_true: Option<Theta>,
}

impl Dataset {
    pub fn new(cfg: &GameConfig, observations: Vec<Observation>) -> Result<Self> {
        let ds = Dataset {
            n_firms: cfg.n_firms,
            n_sizes: cfg.n_sizes,
            observations,
            seed: None,
            fingerprint: None,
            theta_true: None,
        };
        ds.validate(cfg)?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn validate(&self, cfg: &GameConfig) -> Result<()> {
        if self.n_firms != cfg.n_firms || self.n_sizes != cfg.n_sizes {
            return Err(Error::invalid(format!(
                "dataset has {} firms and {} sizes, configuration has {} and {}",
                self.n_firms, self.n_sizes, cfg.n_firms, cfg.n_sizes
            )));
        }
        if self.observations.is_empty() {
            return Err(Error::invalid("dataset has no observations"));
        }
        let limit = cfg.n_profiles() as u32;
        for (i, o) in self.observations.iter().enumerate() {
            if o.x >= cfg.n_states() || o.actions >= limit {
                return Err(Error::invalid(format!("observation {} is out of range", i + 1)));
            }
        }
        Ok(())
    }
}

/// FNV-1a hash of the game configuration and parameter vector.
pub fn config_fingerprint(cfg: &GameConfig, theta: &Theta) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write_u64(cfg.n_firms as u64);
    h.write_u64(cfg.n_sizes as u64);
    h.write_u64(cfg.beta.to_bits());
    for p in &cfg.size_transition {
        h.write_u64(p.to_bits());
    }
    h.write_u8(u8::from(cfg.include_euler));
    for t in theta.to_vec() {
        h.write_u64(t.to_bits());
    }
    h.finish()
}

/// Options for [`solve_equilibrium`]: Anderson memory 5, tolerance 1e-12.
pub fn equilibrium_options() -> AndersonOptions {
    AndersonOptions {
        memory: 5,
        damping: 1.0,
        max_iter: 20_000,
        tol: 1e-12,
    }
}

/// Solves `v = Φ(θ, v)` from `v0` by Anderson-accelerated fixed-point
/// iteration. Starting from zeros is the equilibrium-selection rule used
/// throughout.
pub fn solve_equilibrium(cfg: &GameConfig, theta: &Theta, v0: &ValueFunction) -> Result<ValueFunction> {
    solve_equilibrium_with(cfg, theta, v0, &equilibrium_options())
}

pub fn solve_equilibrium_with(
    cfg: &GameConfig,
    theta: &Theta,
    v0: &ValueFunction,
    opts: &AndersonOptions,
) -> Result<ValueFunction> {
    crate::game::check_dims(cfg, theta, v0)?;
    let th = theta.to_vec();
    let res = fixed_point_solve(
        |v, out| {
            phi_into(cfg, &th, v, out);
            Ok(())
        },
        v0.as_slice(),
        opts,
    )?;
    if !res.converged {
        return Err(Error::Equilibrium {
            theta: th,
            residual: res.residual,
        });
    }
    ValueFunction::from_flat(cfg, res.y)
}

/// State-to-state kernel `M(x'|x) = f_s(s'|s)·Π_j Λ_j(x, a'_j)`.
pub fn state_kernel(cfg: &GameConfig, ccps: &Ccps) -> Matrix {
    let nx = cfg.n_states();
    let np = cfg.n_profiles();
    let mut m = Matrix::zeros(nx, nx);
    let mut profile_probs = vec![0.0; np];
    for x in 0..nx {
        for (profile, w) in profile_probs.iter_mut().enumerate() {
            *w = (0..cfg.n_firms).map(|j| ccps.get(j, x, (profile >> j) & 1)).product();
        }
        let s = cfg.size_of(x) - 1;
        let row = m.row_mut(x);
        for s2 in 0..cfg.n_sizes {
            let f = cfg.size_prob(s, s2);
            for (profile, w) in profile_probs.iter().enumerate() {
                row[s2 * np + profile] = f * w;
            }
        }
    }
    m
}

/// Left fixed point `π M = π` of a row-stochastic kernel by power iteration
/// from `start`, stopping when successive iterates differ by at most `tol` in
/// the 1-norm.
///
/// A kernel that leaves `start` invariant (for instance the identity) returns
/// `start` after one step; reducibility is not detected.
pub fn kernel_stationary_distribution(kernel: &Matrix, start: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = kernel.rows();
    if start.len() != n {
        return Err(Error::DimensionMismatch {
            what: "initial distribution",
            expected: n,
            found: start.len(),
        });
    }
    let mut pi = start.to_vec();
    let mut next = vec![0.0; n];
    let mut change = f64::INFINITY;
    for _ in 0..max_iter {
        kernel.transpose_matvec(&pi, &mut next);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|p| *p /= total);
        change = pi.iter().zip(&next).map(|(a, b)| crate::math::abs(a - b)).sum();
        core::mem::swap(&mut pi, &mut next);
        if change <= tol {
            return Ok(pi);
        }
    }
    Err(Error::StationaryNotConverged {
        iterations: max_iter,
        change,
    })
}

/// Ergodic distribution of the state chain induced by `ccps`, from a uniform
/// start, to 1e-12.
pub fn stationary_distribution(ccps: &Ccps, cfg: &GameConfig) -> Result<Vec<f64>> {
    let nx = cfg.n_states();
    let kernel = state_kernel(cfg, ccps);
    kernel_stationary_distribution(&kernel, &vec![1.0 / nx as f64; nx], 1e-13, 1_000_000)
}

/// Draws `n` observations at the equilibrium reached from zero values.
pub fn simulate_dataset(cfg: &GameConfig, theta_true: &Theta, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    cfg.validate()?;
    let v = solve_equilibrium(cfg, theta_true, &ValueFunction::zeros(cfg))?;
    let ccps = choice_probs(&v)?;
    let pi = stationary_distribution(&ccps, cfg)?;
    let mut cumulative = Vec::with_capacity(pi.len());
    let mut acc = 0.0;
    for p in &pi {
        acc += p;
        cumulative.push(acc);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observations = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.gen::<f64>() * acc;
        let x = cumulative.partition_point(|&c| c <= u).min(pi.len() - 1);
        let mut actions = 0u32;
        for j in 0..cfg.n_firms {
            let draw: f64 = rng.gen();
            if draw < ccps.get(j, x, 1) {
                actions |= 1 << j;
            }
        }
        observations.push(Observation { x, actions });
    }
    Ok(Dataset {
        n_firms: cfg.n_firms,
        n_sizes: cfg.n_sizes,
        observations,
        seed: Some(seed),
        fingerprint: Some(config_fingerprint(cfg, theta_true)),
        theta_true: Some(theta_true.clone()),
    })
}
