use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Scalar step-size profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant,
    /// `(1 + t)^(-beta)`.
    PowerLaw,
}

/// `gamma(t) = scale * gamma0 * profile(t)`, elementwise over parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct LearningRateSchedule<T> {
    pub kind: ScheduleKind,
    #[serde(default = "one")]
    pub gamma0: T,
    /// Exponent of the power law; ignored for constant schedules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<T>,
    pub scale: Vec<T>,
}

fn one<T: Scalar>() -> T {
    T::one()
}

impl<T: Scalar> LearningRateSchedule<T> {
    pub fn constant(scale: Vec<T>) -> Self {
        Self { kind: ScheduleKind::Constant, gamma0: T::one(), beta: None, scale }
    }

    pub fn power_law(gamma0: T, beta: T, scale: Vec<T>) -> Self {
        Self { kind: ScheduleKind::PowerLaw, gamma0, beta: Some(beta), scale }
    }

    pub fn is_constant(&self) -> bool {
        self.kind == ScheduleKind::Constant
    }

    /// Scalar profile `gamma0 * profile(t)` without the per-parameter scale.
    #[inline]
    pub fn base_value(&self, t: T) -> T {
        match (self.kind, self.beta) {
            (ScheduleKind::PowerLaw, Some(beta)) => self.gamma0 * (T::one() + t).powf(-beta),
            _ => self.gamma0,
        }
    }

    /// Per-parameter learning rate at time `t`.
    pub fn lr_value(&self, t: T) -> Vec<T> {
        let g = self.base_value(t);
        self.scale.iter().map(|s| *s * g).collect()
    }

    pub fn check(&self) -> Result<()> {
        if !(self.gamma0 > T::zero()) || !self.gamma0.is_finite() {
            return Err(Error::validation("schedule.gamma0", "must be positive"));
        }
        if self.scale.iter().any(|s| *s < T::zero() || !s.is_finite()) || !self.scale.iter().any(|s| *s > T::zero()) {
            return Err(Error::validation("schedule.scale", "entries must be finite, nonnegative and not all zero"));
        }
        if self.kind == ScheduleKind::PowerLaw {
            match self.beta {
                Some(beta) if beta > T::zero() && beta <= T::one() => {}
                _ => return Err(Error::validation("schedule.beta", "power-law schedules need beta in (0, 1]")),
            }
        }
        Ok(())
    }
}

/// Outcome of checking a schedule against the step-size conditions of the
/// convergence theory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleReport {
    /// `int gamma = inf` and `int gamma^2 < inf`.
    pub consistency_conditions: bool,
    /// The stronger conditions behind the L2 rates and the CLT: `beta` in (1/2, 1).
    pub rate_conditions: bool,
    /// Constant step size: the estimate tracks the truth but is not consistent.
    pub tracking_mode: bool,
    pub notes: Vec<String>,
}

/// Classifies a schedule. Fails only when the schedule itself is malformed.
pub fn validate_schedule<T: Scalar>(schedule: &LearningRateSchedule<T>) -> Result<ScheduleReport> {
    schedule.check()?;
    let report = match schedule.kind {
        ScheduleKind::Constant => ScheduleReport {
            consistency_conditions: false,
            rate_conditions: false,
            tracking_mode: true,
            notes: vec!["constant learning rate: tracking mode, no consistency guarantee (integral of gamma^2 diverges)".into()],
        },
        ScheduleKind::PowerLaw => {
            let b = schedule.beta.map_or(f64::NAN, |b| b.to_f64_lossy());
            let consistent = b > 0.5 && b <= 1.0;
            let rates = b > 0.5 && b < 1.0;
            let mut notes = Vec::new();
            if b <= 0.5 {
                notes.push(format!("beta = {b}: integral of gamma^2 diverges, step-size conditions violated"));
            } else if !rates {
                notes.push("beta = 1: consistent, but outside the range covered by the rate and CLT results".into());
            }
            ScheduleReport { consistency_conditions: consistent, rate_conditions: rates, tracking_mode: false, notes }
        }
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_values() {
        let s = LearningRateSchedule::<f64>::power_law(1.0, 0.75, vec![1.0]);
        assert_eq!(s.lr_value(0.0), vec![1.0]);
        assert!((s.lr_value(15.0)[0] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn reports() {
        let low = validate_schedule(&LearningRateSchedule::power_law(1.0, 0.4, vec![1.0])).unwrap();
        assert!(!low.consistency_conditions);
        let good = validate_schedule(&LearningRateSchedule::power_law(1.0, 0.75, vec![1.0])).unwrap();
        assert!(good.consistency_conditions && good.rate_conditions);
        let one = validate_schedule(&LearningRateSchedule::power_law(1.0, 1.0, vec![1.0])).unwrap();
        assert!(one.consistency_conditions && !one.rate_conditions);
        let c = validate_schedule(&LearningRateSchedule::constant(vec![8e-3])).unwrap();
        assert!(c.tracking_mode && !c.consistency_conditions);
    }

    #[test]
    fn nonpositive_gamma_is_invalid() {
        let mut s = LearningRateSchedule::constant(vec![1.0]);
        s.gamma0 = 0.0;
        assert!(validate_schedule(&s).is_err());
    }

    #[test]
    fn json_shape() {
        let s: LearningRateSchedule<f64> =
            serde_json::from_str(r#"{"kind":"power-law","beta":0.75,"gamma0":0.2,"scale":[1.0]}"#).unwrap();
        assert_eq!(s, LearningRateSchedule::power_law(0.2, 0.75, vec![1.0]));
    }
}
