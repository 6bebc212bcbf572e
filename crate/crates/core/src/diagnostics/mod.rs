//! Empirical checks of the theory: error sweeps over N, moment bounds,
//! propagation of chaos, rate functions and CLT moment checks.

mod clt;
mod coupling;
mod moments;
mod rates;
pub mod stats;
mod sweep;

use serde::{Deserialize, Serialize};

pub use clt::{clt_rescaled_moments, CltRow, CltSpec, CltSummary};
pub use coupling::{coupling_distance, coupling_distance_from, coupling_sweep, CouplingSpec};
pub use moments::{MomentReport, MomentSpec, MomentTracker, DEFAULT_ALARM_LEVEL};
pub use rates::{poc_rate, rate_function_a, rho_rate};
pub use sweep::{l2_error_sweep, summarize_replicates, ReplicateSummary, SweepRow, SweepTable};

use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;

/// Which diagnostics `diagnose` runs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clt: Option<CltSpec>,
}

impl DiagnoseSpec {
    pub fn validate(&self, cfg: &ExperimentConfig) -> Result<()> {
        if let Some(m) = &self.moments {
            MomentTracker::new(m.powers.clone(), m.alarm_level)?;
        }
        if let Some(c) = &self.coupling {
            if c.n_small.is_empty() || c.n_small.iter().any(|n| *n == 0 || *n > c.n_big) {
                return Err(Error::validation("diagnose.coupling.n_small", "needs 1 <= N_small <= N_big"));
            }
            if c.replicates == 0 {
                return Err(Error::validation("diagnose.coupling.replicates", "must be at least 1"));
            }
        }
        if let Some(c) = &self.clt {
            let est = cfg
                .estimators
                .get(c.estimator)
                .ok_or_else(|| Error::validation("diagnose.clt.estimator", "no such estimator"))?;
            let report = crate::estimators::validate_schedule(&est.schedule)?;
            if !report.rate_conditions {
                return Err(Error::validation(
                    "diagnose.clt",
                    "the CLT regime needs a power-law schedule with beta in (1/2, 1)",
                ));
            }
        }
        Ok(())
    }
}
