use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Data-generating parameter as a function of simulation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TruthSchedule<T> {
    Constant { theta: Vec<T> },
    /// `start` on `[0, switch_time)`, `end` from `switch_time` on.
    Changepoint { start: Vec<T>, end: Vec<T>, switch_time: T },
    /// Affine from `start` at `t = 0` to `end` at `t = horizon`, clamped afterwards.
    LinearRamp { start: Vec<T>, end: Vec<T>, horizon: T },
}

impl<T: Scalar> TruthSchedule<T> {
    pub fn constant(theta: Vec<T>) -> Self {
        TruthSchedule::Constant { theta }
    }

    pub fn dim(&self) -> usize {
        match self {
            TruthSchedule::Constant { theta } => theta.len(),
            TruthSchedule::Changepoint { start, .. } | TruthSchedule::LinearRamp { start, .. } => start.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[T]| v.iter().all(|x| x.is_finite());
        match self {
            TruthSchedule::Constant { theta } => {
                if theta.is_empty() || !finite(theta) {
                    return Err(Error::validation("truth.theta", "must be a non-empty finite vector"));
                }
            }
            TruthSchedule::Changepoint { start, end, switch_time: t } | TruthSchedule::LinearRamp { start, end, horizon: t } => {
                if start.is_empty() || start.len() != end.len() || !finite(start) || !finite(end) {
                    return Err(Error::validation("truth", "start/end must be finite vectors of equal length"));
                }
                if !(*t > T::zero()) || !t.is_finite() {
                    return Err(Error::validation("truth", "switch time / horizon must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Truth at time `t >= 0`.
    pub fn truth_at(&self, t: T) -> Vec<T> {
        match self {
            TruthSchedule::Constant { theta } => theta.clone(),
            TruthSchedule::Changepoint { start, end, switch_time } => {
                if t < *switch_time {
                    start.clone()
                } else {
                    end.clone()
                }
            }
            TruthSchedule::LinearRamp { start, end, horizon } => {
                if t >= *horizon {
                    return end.clone();
                }
                let frac = (t / *horizon).max(T::zero());
                start.iter().zip(end).map(|(a, b)| *a + (*b - *a) * frac).collect()
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, TruthSchedule::Constant { .. })
    }
}
