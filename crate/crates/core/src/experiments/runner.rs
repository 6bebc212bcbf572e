use rayon::prelude::*;
use serde::Serialize;

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimators::{EstimateRecord, Estimator, UpdateSettings};
use crate::sde::{initial_ensemble, run_trajectory, Observer, ParticleNoise, RngStream, SimulationSpec, AUX_STREAM_BASE};

/// Seed of replicate `r`.
pub fn replicate_seed(base_seed: u64, replicate: usize) -> u64 {
    base_seed.wrapping_add(replicate as u64)
}

/// Simulation part of a config at `n_particles`.
pub fn simulation_spec(cfg: &ExperimentConfig) -> Result<SimulationSpec<f64>> {
    Ok(SimulationSpec {
        model: cfg.model_spec()?,
        truth: cfg.truth.clone(),
        eta_true: cfg.eta_true.clone(),
        dt: cfg.dt,
        n_steps: cfg.n_steps,
    })
}

/// Instantiates the config's estimators for one replicate.
///
/// Initial estimates of estimator `k` come from stream `AUX_STREAM_BASE + k`
/// of the replicate seed; fixed parameters start at the truth.
pub fn build_estimators(cfg: &ExperimentConfig, n_particles: usize, seed: u64) -> Result<Vec<Estimator<f64>>> {
    let truth0 = cfg.truth.truth_at(0.0);
    let mut out = Vec::with_capacity(cfg.estimators.len());
    for (k, spec) in cfg.estimators.iter().enumerate() {
        let kind = spec.to_kind()?;
        let model = cfg.model_spec_weighted(spec.weighting)?;
        let dim = spec.init.lower.len();
        let free = spec.free.clone().unwrap_or_else(|| vec![true; dim]);
        let mut rng = RngStream::new(seed, AUX_STREAM_BASE + k as u64);
        let mut init: Vec<f64> = spec.init.lower.iter().zip(&spec.init.upper).map(|(l, u)| rng.uniform(*l, *u)).collect();
        let admissible = if kind.is_diffusion() {
            cfg.eta_box(model.diffusion_param_dim())?
        } else {
            for (a, f) in free.iter().enumerate() {
                if !f {
                    init[a] = truth0[a];
                }
            }
            model.admissible().clone()
        };
        let settings = UpdateSettings { schedule: spec.schedule.clone(), free, rmsprop: spec.rmsprop };
        let est = Estimator::new(spec.label.clone(), kind, model, settings, admissible, init, n_particles, cfg.record_every)?
            .with_tail_start(cfg.tail_start());
        out.push(est);
    }
    Ok(out)
}

/// Result of one estimator within one replicate.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorOutcome {
    pub label: String,
    pub kind: &'static str,
    pub param_names: Vec<String>,
    pub initial: Vec<f64>,
    pub final_value: Vec<f64>,
    pub tail_mean: Vec<f64>,
    /// Truth at the end of the run (diffusion parameters for diffusion estimators).
    pub truth: Vec<f64>,
    pub frozen: bool,
    #[serde(skip)]
    pub history: Vec<EstimateRecord<f64>>,
}

/// Result of one replicate. A failed replicate keeps its error message and no estimates.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub seed: u64,
    pub n_particles: usize,
    pub estimators: Vec<EstimatorOutcome>,
    pub failure: Option<String>,
}

impl ReplicateOutcome {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    pub fn estimator(&self, label: &str) -> Option<&EstimatorOutcome> {
        self.estimators.iter().find(|e| e.label == label)
    }
}

/// Runs one replicate at `n_particles` with the config's estimators and any
/// extra observers. Blowups and estimator divergence are recorded, not raised.
pub fn run_replicate(
    cfg: &ExperimentConfig,
    n_particles: usize,
    replicate: usize,
    extra: &mut [&mut dyn Observer<f64>],
) -> Result<ReplicateOutcome> {
    let seed = replicate_seed(cfg.base_seed, replicate);
    let sim = simulation_spec(cfg)?;
    let mut estimators = build_estimators(cfg, n_particles, seed)?;
    let mut noise = ParticleNoise::new(seed, n_particles, sim.model.state_dim());
    let x0 = initial_ensemble(&mut noise)?;
    let result = {
        let mut observers: Vec<&mut dyn Observer<f64>> = Vec::with_capacity(estimators.len() + extra.len());
        for e in estimators.iter_mut() {
            observers.push(e);
        }
        for o in extra.iter_mut() {
            observers.push(&mut **o);
        }
        run_trajectory(&sim, x0, &mut noise, &mut observers)
    };
    let failure = match result {
        Ok(_) => None,
        Err(e @ (Error::SimulationBlowup { .. } | Error::EstimatorDivergence { .. })) => Some(e.to_string()),
        Err(e) => return Err(e),
    };
    let t_end = cfg.dt * cfg.n_steps as f64;
    let truth_end = cfg.truth.truth_at(t_end);
    let outcomes = if failure.is_some() {
        Vec::new()
    } else {
        estimators
            .into_iter()
            .map(|e| {
                let truth = if e.kind().is_diffusion() { cfg.eta_true.clone().unwrap_or_default() } else { truth_end.clone() };
                let history = e.history().to_vec();
                EstimatorOutcome {
                    label: e.label().to_string(),
                    kind: e.kind().id(),
                    param_names: e.param_names().to_vec(),
                    initial: history[0].values.clone(),
                    final_value: e.state().theta.clone(),
                    tail_mean: e.tail_mean().unwrap_or_else(|| e.state().theta.clone()),
                    truth,
                    frozen: e.state().frozen,
                    history,
                }
            })
            .collect()
    };
    Ok(ReplicateOutcome { replicate, seed, n_particles, estimators: outcomes, failure })
}

/// Runs replicates `0..replicates` (concurrently when threads are available);
/// results come back sorted by replicate id.
pub fn run_replicates(cfg: &ExperimentConfig, n_particles: usize, replicates: usize) -> Result<Vec<ReplicateOutcome>> {
    (0..replicates).into_par_iter().map(|r| run_replicate(cfg, n_particles, r, &mut [])).collect()
}
