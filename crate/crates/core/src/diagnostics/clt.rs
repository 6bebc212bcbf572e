use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stats::moments;
use crate::error::{Error, Result};
use crate::estimators::validate_schedule;
use crate::experiments::{run_replicates, ExperimentConfig};

/// CLT check settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltSpec {
    /// Index into the config's estimator list.
    #[serde(default)]
    pub estimator: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltRow {
    pub param: String,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltSummary {
    pub rows: Vec<CltRow>,
    /// Rescaled errors per free parameter, in replicate order.
    pub rescaled: Vec<Vec<f64>>,
    pub excluded_count: usize,
}

impl CltSummary {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "param,variance,skewness,excess_kurtosis,replicates")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.param, r.variance, r.skewness, r.excess_kurtosis, r.replicates)?;
        }
        Ok(())
    }
}

/// Shape of `gamma_T^(-1/2) (theta_T - center)` across replicates, where the
/// center is the pooled replicate mean. Only free parameters are reported.
pub fn clt_rescaled_moments(cfg: &ExperimentConfig, spec: &CltSpec, replicates: usize) -> Result<CltSummary> {
    let est = cfg
        .estimators
        .get(spec.estimator)
        .ok_or_else(|| Error::validation("diagnose.clt.estimator", "no such estimator"))?;
    let report = validate_schedule(&est.schedule)?;
    if report.tracking_mode || !report.rate_conditions {
        return Err(Error::validation(
            "diagnose.clt",
            "the CLT regime needs a power-law schedule with beta in (1/2, 1)",
        ));
    }
    if replicates < 3 {
        return Err(Error::validation("replicates", "moment checks need at least 3 replicates"));
    }
    let outcomes = run_replicates(cfg, cfg.n_particles, replicates)?;
    let label = est.label();
    let finals: Vec<(Vec<f64>, Vec<String>)> = outcomes
        .iter()
        .filter_map(|o| o.estimator(&label).map(|e| (e.final_value.clone(), e.param_names.clone())))
        .collect();
    let excluded = outcomes.len() - finals.len();
    if finals.len() < 3 {
        return Err(Error::Infeasible("fewer than 3 replicates finished".into()));
    }
    let names = finals[0].1.clone();
    let free = est.free.clone().unwrap_or_else(|| vec![true; names.len()]);
    let t_end = cfg.dt * cfg.n_steps as f64;
    let gamma = est.schedule.lr_value(t_end);
    let mut rows = Vec::new();
    let mut rescaled = Vec::new();
    for (a, name) in names.iter().enumerate() {
        if !free[a] {
            continue;
        }
        let vals: Vec<f64> = finals.iter().map(|(v, _)| v[a]).collect();
        let center = super::stats::mean(&vals);
        let z: Vec<f64> = vals.iter().map(|v| (v - center) / gamma[a].sqrt()).collect();
        let m = moments(&z)?;
        rows.push(CltRow {
            param: name.clone(),
            variance: m.variance,
            skewness: m.skewness,
            excess_kurtosis: m.excess_kurtosis(),
            replicates: z.len(),
        });
        rescaled.push(z);
    }
    Ok(CltSummary { rows, rescaled, excluded_count: excluded })
}
