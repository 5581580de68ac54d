//! Stationary dynamic entry/exit game with type-I extreme value shocks.
//!
//! Observed state `x = (s, a_prev)` pairs a market size `s ∈ 1..=|S|` with the
//! lagged entry decisions of all `J` firms; its index is
//! `(s − 1)·2^J + Σ_j a_prev_j·2^(j−1)` (firms numbered from 1). Value vectors
//! are flattened firm-major, then state, then action.

mod jacobian;
mod model;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::EULER_GAMMA;
use crate::numerics::Matrix;

pub use jacobian::{analytic_jacobian, SparseJacobian};
pub(crate) use model::check_dims;

pub(crate) mod model_internals {
    pub(crate) use super::model::{entry_features, fold_firms, integrate_sizes};
}

pub use model::{
    build_h_z, choice_probs, constraint_g, constraint_g_into, expected_features, expected_utility,
    flow_utility_features, phi, phi_into, surplus, transition_probs,
};

/// Number of actions (exit/stay out = 0, enter/stay in = 1).
pub const N_ACTIONS: usize = 2;

/// Largest supported number of firms; the state space grows as `2^J`.
pub const MAX_FIRMS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub n_firms: usize,
    pub n_sizes: usize,
    /// Discount factor in `[0, 1)`.
    pub beta: f64,
    /// Row-stochastic `|S| × |S|` market-size transition, row-major.
    pub size_transition: Vec<f64>,
    /// Add Euler's constant to the surplus `S(v) = ln Σ exp v (+ γ_E)`.
    pub include_euler: bool,
}

impl GameConfig {
    pub fn new(n_firms: usize, n_sizes: usize, beta: f64, size_transition: Vec<f64>) -> Result<Self> {
        let cfg = GameConfig {
            n_firms,
            n_sizes,
            beta,
            size_transition,
            include_euler: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Uses [`default_size_transition`].
    pub fn with_default_transition(n_firms: usize, n_sizes: usize, beta: f64) -> Result<Self> {
        Self::new(n_firms, n_sizes, beta, default_size_transition(n_sizes))
    }

    /// Five firms, five market sizes, `β = 0.95`, default size transition.
    pub fn default_design() -> Self {
        Self::with_default_transition(5, 5, 0.95).expect("default design is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_firms == 0 || self.n_firms > MAX_FIRMS {
            return Err(Error::invalid(format!(
                "n_firms must be in 1..={MAX_FIRMS}, got {}",
                self.n_firms
            )));
        }
        if self.n_sizes == 0 {
            return Err(Error::invalid("n_sizes must be at least 1"));
        }
        if !(self.beta >= 0.0 && self.beta < 1.0) {
            return Err(Error::invalid(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        let n = self.n_sizes;
        if self.size_transition.len() != n * n {
            return Err(Error::DimensionMismatch {
                what: "size transition matrix",
                expected: n * n,
                found: self.size_transition.len(),
            });
        }
        for (r, row) in self.size_transition.chunks_exact(n).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::invalid(format!("size transition row {} has a negative or non-finite entry", r + 1)));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("size transition row {} sums to {total}, not 1", r + 1)));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n_profiles(&self) -> usize {
        1 << self.n_firms
    }

    /// `|χ| = |S|·2^J`
    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_sizes << self.n_firms
    }

    /// `|Y| = J·|χ|·|A|`
    #[inline]
    pub fn n_values(&self) -> usize {
        self.n_firms * self.n_states() * N_ACTIONS
    }

    /// `K = J + 3`
    #[inline]
    pub fn n_params(&self) -> usize {
        self.n_firms + 3
    }

    #[inline]
    pub fn value_index(&self, firm: usize, x: usize, action: usize) -> usize {
        (firm * self.n_states() + x) * N_ACTIONS + action
    }

    /// Market size (1-based) of state `x`.
    #[inline]
    pub fn size_of(&self, x: usize) -> usize {
        (x >> self.n_firms) + 1
    }

    /// Lagged action profile of state `x` as a bit mask (bit `j` is firm `j`, 0-based).
    #[inline]
    pub fn lagged_of(&self, x: usize) -> u32 {
        (x & (self.n_profiles() - 1)) as u32
    }

    /// Probability of size `to` next period given size `from` (both 0-based).
    #[inline]
    pub fn size_prob(&self, from: usize, to: usize) -> f64 {
        self.size_transition[from * self.n_sizes + to]
    }

    #[inline]
    pub fn euler_term(&self) -> f64 {
        if self.include_euler {
            EULER_GAMMA
        } else {
            0.0
        }
    }
}

/// Persistent size chain: stay with probability 0.8, move to each neighbor
/// with 0.1, reflected at the boundaries (a single size always stays).
pub fn default_size_transition(n_sizes: usize) -> Vec<f64> {
    let mut f = vec![0.0; n_sizes * n_sizes];
    let last = n_sizes as isize - 1;
    for s in 0..n_sizes {
        f[s * n_sizes + s] += 0.8;
        for step in [-1isize, 1] {
            let mut t = s as isize + step;
            if t < 0 || t > last {
                t = s as isize - step;
            }
            let t = t.clamp(0, last) as usize;
            f[s * n_sizes + t] += 0.1;
        }
    }
    f
}

/// Structural parameters, ordered `(fc_1, …, fc_J, rs, rn, ec)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    /// Firm fixed effects.
    pub fc: Vec<f64>,
    /// Market-size effect.
    pub rs: f64,
    /// Competition effect, multiplying `ln(1 + number of active rivals)`.
    pub rn: f64,
    /// Entry cost paid when the firm was out last period.
    pub ec: f64,
}

impl Theta {
    /// `fc_j = −2 + 0.1·j`, `rs = 1`, `rn = 4`, `ec = 1`.
    pub fn default_design(n_firms: usize) -> Self {
        Theta {
            fc: (1..=n_firms).map(|j| -2.0 + 0.1 * j as f64).collect(),
            rs: 1.0,
            rn: 4.0,
            ec: 1.0,
        }
    }

    pub fn zeros(n_firms: usize) -> Self {
        Theta {
            fc: vec![0.0; n_firms],
            rs: 0.0,
            rn: 0.0,
            ec: 0.0,
        }
    }

    pub fn from_slice(n_firms: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n_firms + 3 {
            return Err(Error::DimensionMismatch {
                what: "theta",
                expected: n_firms + 3,
                found: values.len(),
            });
        }
        if !crate::math::all_finite(values) {
            return Err(Error::invalid("theta has non-finite entries"));
        }
        Ok(Theta {
            fc: values[..n_firms].to_vec(),
            rs: values[n_firms],
            rn: values[n_firms + 1],
            ec: values[n_firms + 2],
        })
    }

    pub fn n_firms(&self) -> usize {
        self.fc.len()
    }

    pub fn len(&self) -> usize {
        self.fc.len() + 3
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.fc.clone();
        v.extend([self.rs, self.rn, self.ec]);
        v
    }

    /// Parameter labels in vector order.
    pub fn names(n_firms: usize) -> Vec<String> {
        let mut names: Vec<String> = (1..=n_firms).map(|j| format!("fc_{j}")).collect();
        names.extend(["rs", "rn", "ec"].map(String::from));
        names
    }
}

/// Observed state `x = (s, a_prev)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct State {
    /// Market size, 1-based.
    pub s: usize,
    /// Lagged actions as a bit mask, bit `j` for firm `j` (0-based).
    pub a_prev: u32,
}

impl State {
    pub fn new(s: usize, a_prev: &[u8]) -> Self {
        let mask = a_prev
            .iter()
            .enumerate()
            .fold(0u32, |m, (j, &a)| m | (u32::from(a != 0) << j));
        State { s, a_prev: mask }
    }

    pub fn index(&self, cfg: &GameConfig) -> Result<usize> {
        if self.s == 0 || self.s > cfg.n_sizes {
            return Err(Error::invalid(format!("market size {} outside 1..={}", self.s, cfg.n_sizes)));
        }
        if (self.a_prev as usize) >= cfg.n_profiles() {
            return Err(Error::invalid("lagged action profile has bits beyond n_firms"));
        }
        Ok(((self.s - 1) << cfg.n_firms) + self.a_prev as usize)
    }

    pub fn from_index(cfg: &GameConfig, x: usize) -> Result<Self> {
        if x >= cfg.n_states() {
            return Err(Error::invalid(format!("state index {x} outside 0..{}", cfg.n_states())));
        }
        Ok(State {
            s: cfg.size_of(x),
            a_prev: cfg.lagged_of(x),
        })
    }

    /// Lagged action of firm `j` (0-based).
    pub fn a_prev_of(&self, j: usize) -> u8 {
        ((self.a_prev >> j) & 1) as u8
    }
}

/// Choice-specific values `v[j][x][a]`, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    n_firms: usize,
    n_states: usize,
    values: Vec<f64>,
}

impl ValueFunction {
    pub fn zeros(cfg: &GameConfig) -> Self {
        ValueFunction {
            n_firms: cfg.n_firms,
            n_states: cfg.n_states(),
            values: vec![0.0; cfg.n_values()],
        }
    }

    pub fn from_flat(cfg: &GameConfig, values: Vec<f64>) -> Result<Self> {
        if values.len() != cfg.n_values() {
            return Err(Error::DimensionMismatch {
                what: "value function",
                expected: cfg.n_values(),
                found: values.len(),
            });
        }
        Ok(ValueFunction {
            n_firms: cfg.n_firms,
            n_states: cfg.n_states(),
            values,
        })
    }

    pub fn n_firms(&self) -> usize {
        self.n_firms
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn get(&self, firm: usize, x: usize, action: usize) -> f64 {
        self.values[(firm * self.n_states + x) * N_ACTIONS + action]
    }

    #[inline]
    pub fn set(&mut self, firm: usize, x: usize, action: usize, value: f64) {
        self.values[(firm * self.n_states + x) * N_ACTIONS + action] = value;
    }

    pub fn row(&self, firm: usize, x: usize) -> &[f64] {
        let i = (firm * self.n_states + x) * N_ACTIONS;
        &self.values[i..i + N_ACTIONS]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Conditional choice probabilities `Λ[j][x][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ccps {
    n_firms: usize,
    n_states: usize,
    probs: Vec<f64>,
}

impl Ccps {
    /// Builds CCPs from entry probabilities `P(a = 1 | j, x)` indexed `j·|χ| + x`.
    pub fn from_entry_probs(cfg: &GameConfig, entry: &[f64]) -> Result<Self> {
        let n = cfg.n_firms * cfg.n_states();
        if entry.len() != n {
            return Err(Error::DimensionMismatch {
                what: "entry probabilities",
                expected: n,
                found: entry.len(),
            });
        }
        if entry.iter().any(|p| !(*p >= 0.0 && *p <= 1.0)) {
            return Err(Error::invalid("entry probabilities must lie in [0, 1]"));
        }
        let mut probs = Vec::with_capacity(2 * n);
        for &p in entry {
            probs.push(1.0 - p);
            probs.push(p);
        }
        Ok(Ccps {
            n_firms: cfg.n_firms,
            n_states: cfg.n_states(),
            probs,
        })
    }

    pub(crate) fn from_flat_unchecked(n_firms: usize, n_states: usize, probs: Vec<f64>) -> Self {
        Ccps {
            n_firms,
            n_states,
            probs,
        }
    }

    pub fn n_firms(&self) -> usize {
        self.n_firms
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn get(&self, firm: usize, x: usize, action: usize) -> f64 {
        self.probs[(firm * self.n_states + x) * N_ACTIONS + action]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Copy with every probability clipped to `[floor, 1 − floor]` and rows
    /// renormalized.
    pub fn clipped(&self, floor: f64) -> Ccps {
        let mut probs = self.probs.clone();
        for row in probs.chunks_exact_mut(N_ACTIONS) {
            for p in row.iter_mut() {
                *p = p.clamp(floor, 1.0 - floor);
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
        Ccps { probs, ..*self }
    }
}

/// `G(θ, v) = H θ + z` at a fixed `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDecomposition {
    /// `|Y| × K`
    pub h: Matrix,
    /// `|Y|`
    pub z: Vec<f64>,
}

impl LinearDecomposition {
    /// Evaluates `H θ + z`.
    pub fn apply(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = self.h.mul_vec(theta);
        crate::math::axpy(&mut out, 1.0, &self.z);
        out
    }

    /// Column `i` of `H` for `i < K`, `z` for `i = K`.
    pub fn rhs_column(&self, i: usize) -> Vec<f64> {
        if i < self.h.cols() {
            self.h.column(i)
        } else {
            self.z.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_transition_is_row_stochastic() {
        for n in 1..7 {
            let f = default_size_transition(n);
            for row in f.chunks_exact(n) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
        let f = default_size_transition(3);
        assert_eq!(f, vec![0.8, 0.2, 0.0, 0.1, 0.8, 0.1, 0.0, 0.2, 0.8]);
    }

    #[test]
    fn state_index_is_a_bijection() {
        let cfg = GameConfig::with_default_transition(3, 4, 0.9).unwrap();
        let mut seen = vec![false; cfg.n_states()];
        for s in 1..=4 {
            for mask in 0..8u32 {
                let st = State { s, a_prev: mask };
                let x = st.index(&cfg).unwrap();
                assert_eq!(x, (s - 1) * 8 + mask as usize);
                assert!(!seen[x]);
                seen[x] = true;
                assert_eq!(State::from_index(&cfg, x).unwrap(), st);
            }
        }
        assert!(seen.iter().all(|b| *b));
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        assert!(GameConfig::with_default_transition(2, 2, 1.0).is_err());
        assert!(GameConfig::with_default_transition(0, 2, 0.5).is_err());
        assert!(GameConfig::new(1, 2, 0.5, vec![0.5, 0.6, 0.5, 0.5]).is_err());
        assert!(GameConfig::new(1, 2, 0.5, vec![1.5, -0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn theta_round_trips_through_vector_order() {
        let t = Theta::default_design(5);
        let v = t.to_vec();
        assert_eq!(v.len(), 8);
        assert!((v[0] + 1.9).abs() < 1e-15 && (v[4] + 1.5).abs() < 1e-15);
        assert_eq!(&v[5..], &[1.0, 4.0, 1.0]);
        assert_eq!(Theta::from_slice(5, &v).unwrap(), t);
    }
}
