//! CCP initialization, the NPL step, EPL in its three linear-step modes, and
//! the NFXP baseline.

pub mod ccp;
pub mod epl;
pub mod likelihood;
pub mod nfxp;
pub mod npl;

pub use ccp::{ccp_logit_init, logit_regressors, CcpEstimate};
pub use epl::{
    column_label, epl_estimate, epl_linear_step, pseudo_loglik, upsilon, EplMode, EplOptions, EplState, RhsForm,
    EstimateResult, LinearStep, StageTimings,
};
pub use likelihood::{loglik_at_values, AffineLikelihood, AffineValues, ChoiceCounts};
pub use nfxp::{nfxp_estimate, NfxpOptions};
pub use npl::{npl_mapping, npl_one_step, NplMapping, NplStep, CCP_FLOOR};

use core::fmt;
use core::str::FromStr;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::game::GameConfig;
use crate::timing::Stopwatch;

/// Estimator selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Epl(EplMode),
    Nfxp,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Epl(EplMode::Analytic),
        Method::Epl(EplMode::AnalyticKrylov),
        Method::Epl(EplMode::JacobianFree),
        Method::Nfxp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Epl(m) => m.name(),
            Method::Nfxp => "nfxp-jf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(alloc::format!("unknown method `{s}` (expected epl-anal, epl-krylov, epl-jf or nfxp-jf)")))
    }
}

/// Starting values shared by every method: logit CCPs followed by one NPL step.
#[derive(Debug, Clone, PartialEq)]
pub struct Initialization {
    pub ccp: CcpEstimate,
    pub npl: NplStep,
    pub counts: ChoiceCounts,
    pub time_sec: f64,
}

pub fn initialize(cfg: &GameConfig, ds: &Dataset) -> Result<Initialization> {
    let sw = Stopwatch::start();
    let counts = ChoiceCounts::from_dataset(cfg, ds)?;
    let ccp = ccp_logit_init(ds, cfg)?;
    let npl = npl_one_step(&counts, &ccp.ccps, cfg)?;
    Ok(Initialization {
        ccp,
        npl,
        counts,
        time_sec: sw.elapsed_secs(),
    })
}

/// Runs `method` from a shared initialization. `k_fixed` applies to EPL
/// methods only. The reported total time includes the initialization.
pub fn estimate_from(
    cfg: &GameConfig,
    init: &Initialization,
    method: Method,
    k_fixed: Option<usize>,
) -> Result<EstimateResult> {
    let sw = Stopwatch::start();
    let mut res = match method {
        Method::Epl(mode) => {
            let opts = EplOptions {
                k_fixed,
                ..EplOptions::with_mode(mode)
            };
            epl::epl_estimate_counts(cfg, &init.counts, (&init.npl.theta, &init.npl.v), &opts, sw)?
        }
        Method::Nfxp => {
            let v0 = crate::game::ValueFunction::zeros(cfg);
            nfxp::nfxp_estimate_counts(cfg, &init.counts, &init.npl.theta, &v0, &NfxpOptions::default(), sw)?
        }
    };
    res.timings.init += init.time_sec;
    res.timings.total += init.time_sec;
    Ok(res)
}

/// [`initialize`] followed by [`estimate_from`].
pub fn estimate(cfg: &GameConfig, ds: &Dataset, method: Method, k_fixed: Option<usize>) -> Result<EstimateResult> {
    let init = initialize(cfg, ds)?;
    estimate_from(cfg, &init, method, k_fixed)
}
