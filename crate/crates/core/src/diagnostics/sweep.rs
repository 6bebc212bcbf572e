use std::io::Write;

use serde::Serialize;

use super::stats::{mean, standard_error};
use crate::error::{Error, Result};
use crate::experiments::{run_replicates, ExperimentConfig, ReplicateOutcome};

/// Per-replicate view of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateSummary {
    pub replicate_id: usize,
    pub final_theta: Vec<f64>,
    /// `(theta_final - theta_0)^2` per parameter.
    pub sq_error_truth: Vec<f64>,
    /// `(theta_final - pooled mean)^2` per parameter.
    pub sq_error_pooled: Vec<f64>,
    pub tail_mean: Vec<f64>,
}

/// Summaries of estimator `label` across successful replicates.
pub fn summarize_replicates(outcomes: &[ReplicateOutcome], label: &str) -> Vec<ReplicateSummary> {
    let ok: Vec<_> = outcomes.iter().filter_map(|o| o.estimator(label).map(|e| (o.replicate, e))).collect();
    if ok.is_empty() {
        return Vec::new();
    }
    let p = ok[0].1.final_value.len();
    let pooled: Vec<f64> = (0..p).map(|a| mean(&ok.iter().map(|(_, e)| e.final_value[a]).collect::<Vec<_>>())).collect();
    ok.into_iter()
        .map(|(r, e)| ReplicateSummary {
            replicate_id: r,
            final_theta: e.final_value.clone(),
            sq_error_truth: e.final_value.iter().zip(&e.truth).map(|(v, t)| (v - t).powi(2)).collect(),
            sq_error_pooled: e.final_value.iter().zip(&pooled).map(|(v, m)| (v - m).powi(2)).collect(),
            tail_mean: e.tail_mean.clone(),
        })
        .collect()
}

/// One cell of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub estimator: String,
    pub param: String,
    pub mse: f64,
    pub stderr: f64,
    pub excluded_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn get(&self, n: usize, estimator: &str, param: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.n == n && r.estimator == estimator && r.param == param)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "N,estimator,param,mse,stderr,excluded_count")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{},{}", r.n, r.estimator, r.param, r.mse, r.stderr, r.excluded_count)?;
        }
        Ok(())
    }
}

/// Mean squared error of the final estimate against the truth, per particle
/// count, estimator and parameter. Failed replicates are counted in
/// `excluded_count`. Parameters held fixed are omitted.
pub fn l2_error_sweep(cfg: &ExperimentConfig, n_list: &[usize], replicates: usize) -> Result<SweepTable> {
    if replicates < 2 {
        return Err(Error::validation("replicates", "an L2 sweep needs at least 2 replicates for standard errors"));
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let outcomes = run_replicates(cfg, n, replicates)?;
        let excluded = outcomes.iter().filter(|o| !o.succeeded()).count();
        for spec in &cfg.estimators {
            let label = spec.label();
            let summaries = summarize_replicates(&outcomes, &label);
            let names = outcomes.iter().find_map(|o| o.estimator(&label)).map(|e| e.param_names.clone()).unwrap_or_default();
            let free = spec.free.clone().unwrap_or_else(|| vec![true; names.len()]);
            for (a, name) in names.iter().enumerate() {
                if !free[a] {
                    continue;
                }
                let errs: Vec<f64> = summaries.iter().map(|s| s.sq_error_truth[a]).collect();
                let (mse, se) = if errs.len() >= 2 { (mean(&errs), standard_error(&errs)?) } else { (f64::NAN, f64::NAN) };
                rows.push(SweepRow { n, estimator: label.clone(), param: name.clone(), mse, stderr: se, excluded_count: excluded });
            }
        }
    }
    Ok(SweepTable { rows })
}
