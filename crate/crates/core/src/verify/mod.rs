//! Residual checks for Bellman's principle, barrier conditions, the band
//! around the boundary data, continuity moduli and the weak form of the
//! Bellman inequality.

mod band;
mod barrier;
mod dpp;
mod modulus;
mod weak;

use serde::{Deserialize, Serialize};

pub use band::{band_check, monotone_g_check, BandReport, MonotoneReport};
pub use barrier::{
    barrier_residual, barrier_validate, lambda_rescale, lambda_search, BarrierReport, BarrierScope,
    LAMBDA_CANDIDATES,
};
pub use dpp::{dpp_residual, dpp_rhs, random_policy, DppReport, StoppingRule};
pub use modulus::{modulus_fit, ModulusReport, PairSet};
pub use weak::{weak_residual_of, weak_supersolution_residual, Bump};

/// Auditable outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub instance: String,
    pub parameters: serde_json::Value,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Verdict {
    /// Passes when `statistic ≤ threshold`.
    pub fn at_most(
        check: impl Into<String>,
        instance: impl Into<String>,
        parameters: serde_json::Value,
        statistic: f64,
        threshold: f64,
    ) -> Self {
        Self {
            check: check.into(),
            instance: instance.into(),
            parameters,
            statistic,
            threshold,
            pass: statistic <= threshold,
        }
    }

    /// Passes when `statistic ≥ threshold`.
    pub fn at_least(
        check: impl Into<String>,
        instance: impl Into<String>,
        parameters: serde_json::Value,
        statistic: f64,
        threshold: f64,
    ) -> Self {
        Self {
            pass: statistic >= threshold,
            ..Self::at_most(check, instance, parameters, statistic, threshold)
        }
    }
}
