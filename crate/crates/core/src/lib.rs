//! Efficient pseudo-likelihood (EPL) estimation of stationary dynamic
//! entry/exit games.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function
//! of its inputs; file formats, the command line and the Monte Carlo runner
//! live in the companion `epl` crate.
//!
//! Layout:
//! - [`game`]: state space, choice probabilities, the fixed-point map of the
//!   choice-specific values, the equilibrium constraint `G(θ, v) = v − Φ(θ, v)`,
//!   its decomposition `H(v)θ + z(v)` and the sparse analytic Jacobian.
//! - [`numerics`]: GMRES on abstract operators, central-difference
//!   Jacobian-vector products, dense LU, Anderson-accelerated fixed points and
//!   a BFGS maximizer.
//! - [`data`]: equilibrium solving, stationary distribution and dataset sampling.
//! - [`estimators`]: logit CCP initialization, one NPL step, the EPL loop in
//!   three linear-algebra modes and the nested fixed point baseline.
//! - [`diagnostics`]: forward error bound for Jacobian-free linear solves.
#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod game;
pub mod math;
pub mod numerics;
pub mod timing;

pub use error::{Error, Result};
