//! File formats, Monte Carlo replications, summary tables and the command
//! line for [`epl_core`].

pub mod cli;
pub mod config;
pub mod dataset_io;
pub mod error;
pub mod montecarlo;
pub mod record;
pub mod summary;

pub use error::{HarnessError, Result};
