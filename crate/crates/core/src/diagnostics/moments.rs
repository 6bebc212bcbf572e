use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sde::{Observer, StepView};

fn default_powers() -> Vec<u32> {
    vec![2, 4]
}

/// Moment tracking settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSpec {
    /// Even exponents `2k` of `|x|^(2k)`.
    #[serde(default = "default_powers")]
    pub powers: Vec<u32>,
    /// Second-moment level that raises the growth alarm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alarm_level: Option<f64>,
}

impl Default for MomentSpec {
    fn default() -> Self {
        Self { powers: default_powers(), alarm_level: None }
    }
}

/// Default alarm: a root-mean-square particle norm of 100, four orders of
/// magnitude below the blowup guard.
pub const DEFAULT_ALARM_LEVEL: f64 = 1e4;

/// Observer tracking `(1/N) sum_i |x^i|^(2k)` and its running supremum.
#[derive(Debug, Clone)]
pub struct MomentTracker {
    powers: Vec<u32>,
    /// `series[p][s]`: moment of power `powers[p]` after step `s` (index 0 is the initial state).
    series: Vec<Vec<f64>>,
    times: Vec<f64>,
    alarm_level: f64,
    alarm_step: Option<u64>,
}

/// Summary of one tracked moment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub power: u32,
    pub sup: f64,
    pub final_value: f64,
    /// Mean over the last quarter divided by the mean over the third quarter.
    pub second_half_growth: f64,
}

impl MomentTracker {
    pub fn new(powers: Vec<u32>, alarm_level: Option<f64>) -> Result<Self> {
        if powers.is_empty() || powers.iter().any(|p| *p == 0 || p % 2 == 1) {
            return Err(Error::validation("diagnose.moments.powers", "must be positive even integers"));
        }
        let n = powers.len();
        Ok(Self {
            powers,
            series: vec![Vec::new(); n],
            times: Vec::new(),
            alarm_level: alarm_level.unwrap_or(DEFAULT_ALARM_LEVEL),
            alarm_step: None,
        })
    }

    fn push(&mut self, time: f64, ens: &crate::sde::ParticleEnsemble<f64>) {
        self.times.push(time);
        let n = ens.n_particles() as f64;
        let norms: Vec<f64> = ens.rows().map(crate::scalar::norm_sq).collect();
        for (p, s) in self.powers.iter().zip(self.series.iter_mut()) {
            let k = (*p / 2) as i32;
            s.push(norms.iter().map(|v| v.powi(k)).sum::<f64>() / n);
        }
    }

    pub fn series(&self, power: u32) -> Option<&[f64]> {
        self.powers.iter().position(|p| *p == power).map(|k| self.series[k].as_slice())
    }

    /// Running supremum of a tracked moment.
    pub fn running_sup(&self, power: u32) -> Option<Vec<f64>> {
        let s = self.series(power)?;
        let mut m = f64::NEG_INFINITY;
        Some(s.iter().map(|v| {
            m = m.max(*v);
            m
        }).collect())
    }

    /// First step whose second moment exceeded the alarm level.
    pub fn alarm_step(&self) -> Option<u64> {
        self.alarm_step
    }

    pub fn reports(&self) -> Vec<MomentReport> {
        self.powers
            .iter()
            .zip(&self.series)
            .map(|(p, s)| {
                let n = s.len();
                let q3 = &s[n / 2..(3 * n) / 4];
                let q4 = &s[(3 * n) / 4..];
                let growth = if q3.is_empty() || q4.is_empty() {
                    f64::NAN
                } else {
                    super::stats::mean(q4) / super::stats::mean(q3)
                };
                MomentReport {
                    power: *p,
                    sup: s.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    final_value: *s.last().unwrap_or(&f64::NAN),
                    second_half_growth: growth,
                }
            })
            .collect()
    }

    /// `step,time,power,moment,running_sup` rows every `every` steps.
    pub fn write_csv<W: Write>(&self, out: &mut W, every: u64) -> Result<()> {
        writeln!(out, "step,time,power,moment,running_sup")?;
        let sups: Vec<Vec<f64>> = self.powers.iter().map(|p| self.running_sup(*p).unwrap_or_default()).collect();
        for (s, t) in self.times.iter().enumerate() {
            if s as u64 % every.max(1) != 0 {
                continue;
            }
            for (k, p) in self.powers.iter().enumerate() {
                writeln!(out, "{s},{t},{p},{},{}", self.series[k][s], sups[k][s])?;
            }
        }
        Ok(())
    }
}

impl Observer<f64> for MomentTracker {
    fn observe(&mut self, view: &StepView<'_, f64>) -> Result<()> {
        if self.times.is_empty() {
            self.push(view.before.time, view.before);
        }
        self.push(view.after.time, view.after);
        if self.alarm_step.is_none() {
            let second: f64 = view.after.rows().map(crate::scalar::norm_sq).sum::<f64>() / view.after.n_particles() as f64;
            if !(second <= self.alarm_level) {
                self.alarm_step = Some(view.step);
            }
        }
        Ok(())
    }
}
