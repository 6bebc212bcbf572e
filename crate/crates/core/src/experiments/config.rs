use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::DiagnoseSpec;
use crate::error::{Error, Result};
use crate::estimators::{
    validate_schedule, DiffusionForm, EstimatorKind, LearningRateSchedule, RmsProp, Triplet,
};
use crate::models::{build_model_with_weighting, Diffusion, ModelSpec, ParamBox, TruthSchedule, Weighting, MODEL_IDS};
use crate::objective::SurfaceSpec;

/// Closed box, possibly with infinite bounds (written as `null` in JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

impl BoxSpec {
    pub fn to_param_box(&self, field: &str) -> Result<ParamBox<f64>> {
        let lower = self.lower.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
        let upper = self.upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
        ParamBox::new(lower, upper).map_err(|e| Error::validation(field, e.to_string()))
    }
}

/// Uniform box for initial estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl UniformBox {
    fn validate(&self, field: &str, dim: usize) -> Result<()> {
        if self.lower.len() != dim || self.upper.len() != dim {
            return Err(Error::validation(field, format!("needs {dim} entries")));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !l.is_finite() || !u.is_finite() || l > u) {
            return Err(Error::validation(field, "bounds must be finite with lower <= upper"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParticleInit {
    #[default]
    StandardNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKindName {
    Averaged,
    Triplet,
    AveragedM,
    TripletM,
    Diffusion,
}

/// One estimator attached to every replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub kind: EstimatorKindName,
    /// Overrides the estimator id in outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Observed particle (averaged, diffusion); defaults to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particle: Option<usize>,
    /// Observed triplet (triplet; pairwise diffusion).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triplet: Option<Triplet>,
    /// Index set (averaged-m, triplet-m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<usize>>,
    pub schedule: LearningRateSchedule<f64>,
    /// Uniform law of the initial estimate.
    pub init: UniformBox,
    /// Estimated parameters; the others are held at the truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmsprop: Option<RmsProp<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighting: Option<Weighting>,
}

impl EstimatorSpec {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.to_kind().map(|k| k.id().to_string()).unwrap_or_default())
    }

    pub fn to_kind(&self) -> Result<EstimatorKind> {
        let particle = self.particle.unwrap_or(0);
        Ok(match self.kind {
            EstimatorKindName::Averaged => EstimatorKind::Averaged { particle },
            EstimatorKindName::Triplet => EstimatorKind::Triplet {
                triplet: self.triplet.ok_or_else(|| Error::validation("estimators.triplet", "required for triplet"))?,
            },
            EstimatorKindName::AveragedM => EstimatorKind::AveragedM {
                pi: self.pi.clone().ok_or_else(|| Error::validation("estimators.pi", "required for averaged-m"))?,
            },
            EstimatorKindName::TripletM => EstimatorKind::TripletM {
                pi: self.pi.clone().ok_or_else(|| Error::validation("estimators.pi", "required for triplet-m"))?,
            },
            EstimatorKindName::Diffusion => EstimatorKind::Diffusion {
                form: match self.triplet {
                    Some(triplet) => DiffusionForm::Pairwise { triplet },
                    None => DiffusionForm::Averaged { particle },
                },
            },
        })
    }
}

/// Particle counts for an L2-error sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub n_list: Vec<usize>,
}

fn default_dt() -> f64 {
    0.1
}
fn default_replicates() -> usize {
    1
}
fn default_tail() -> f64 {
    0.1
}
fn default_record_every() -> u64 {
    10
}

/// One fully reproducible experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub model: String,
    /// Noise level of constant-diffusion models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub truth: TruthSchedule<f64>,
    /// True diffusion parameters of parameterized-diffusion models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_true: Option<Vec<f64>>,
    pub n_particles: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub n_steps: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub particle_init: ParticleInit,
    /// Admissible set of the drift parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissible: Option<BoxSpec>,
    /// Admissible set of the diffusion parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_admissible: Option<BoxSpec>,
    #[serde(default)]
    pub estimators: Vec<EstimatorSpec>,
    /// Fraction of the final steps averaged into the tail-window estimate.
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    /// Estimates are recorded every this many steps.
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// Trajectory dumps (simulate) are recorded every this many steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_every: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSpec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnose: Option<DiagnoseSpec>,
}

/// Parses and validates a config from JSON text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text)
        .map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_config(&text)
}

impl ExperimentConfig {
    /// Model with the config's default weighting and admissible set.
    pub fn model_spec(&self) -> Result<ModelSpec<f64>> {
        self.model_spec_weighted(None)
    }

    pub fn model_spec_weighted(&self, weighting: Option<Weighting>) -> Result<ModelSpec<f64>> {
        if !MODEL_IDS.contains(&self.model.as_str()) {
            return Err(Error::validation("model", format!("unknown model `{}`; known: {}", self.model, MODEL_IDS.join(", "))));
        }
        let sigma = self.sigma.unwrap_or(0.0);
        let model = build_model_with_weighting(&self.model, sigma, weighting)
            .map_err(|e| Error::validation("sigma", e.to_string()))?;
        if matches!(model.diffusion(), Diffusion::Constant(_)) && self.sigma.is_none() {
            return Err(Error::validation("sigma", format!("model `{}` needs a noise level", self.model)));
        }
        match &self.admissible {
            Some(b) => model.with_admissible(b.to_param_box("admissible")?).map_err(|e| Error::validation("admissible", e.to_string())),
            None => Ok(model),
        }
    }

    /// Admissible box of the diffusion parameters.
    pub fn eta_box(&self, m: usize) -> Result<ParamBox<f64>> {
        match &self.eta_admissible {
            Some(b) => {
                let pb = b.to_param_box("eta_admissible")?;
                if pb.dim() != m {
                    return Err(Error::validation("eta_admissible", format!("needs {m} entries")));
                }
                Ok(pb)
            }
            None => Ok(ParamBox::unbounded(m)),
        }
    }

    /// Particle counts the config runs: the sweep list, or `n_particles` alone.
    pub fn particle_counts(&self) -> Vec<usize> {
        match &self.sweep {
            Some(s) => s.n_list.clone(),
            None => vec![self.n_particles],
        }
    }

    /// Step from which the tail-window average starts.
    pub fn tail_start(&self) -> u64 {
        let w = ((self.n_steps as f64) * self.tail_fraction).ceil() as u64;
        self.n_steps - w.clamp(1, self.n_steps)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.model_spec()?;
        if let Some(s) = self.sigma {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::validation("sigma", "must be finite and non-negative"));
            }
        }
        let p = model.param_dim();
        self.truth.validate()?;
        if self.truth.dim() != p {
            return Err(Error::validation("truth", format!("model `{}` has {p} parameters", self.model)));
        }
        for t in [0.0, self.dt * self.n_steps as f64] {
            if !model.admissible().contains(&self.truth.truth_at(t)) {
                return Err(Error::validation("truth", "true parameter outside the admissible set"));
            }
        }
        let m = model.diffusion_param_dim();
        match &self.eta_true {
            None if m > 0 => return Err(Error::validation("eta_true", "required for this model")),
            Some(e) if e.len() != m => return Err(Error::validation("eta_true", format!("needs {m} entries"))),
            Some(e) if e.iter().any(|v| !v.is_finite()) => return Err(Error::validation("eta_true", "must be finite")),
            _ => {}
        }
        if self.n_particles == 0 {
            return Err(Error::validation("n_particles", "must be at least 1"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::validation("dt", "must be positive and finite"));
        }
        if self.n_steps == 0 {
            return Err(Error::validation("n_steps", "must be at least 1"));
        }
        if self.replicates == 0 {
            return Err(Error::validation("replicates", "must be at least 1"));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::validation("tail_fraction", "must lie in (0, 1]"));
        }
        if self.record_every == 0 || self.trajectory_every == Some(0) {
            return Err(Error::validation("record_every", "must be at least 1"));
        }
        if let Some(s) = &self.sweep {
            if s.n_list.is_empty() || s.n_list.contains(&0) {
                return Err(Error::validation("sweep.n_list", "must be a non-empty list of positive counts"));
            }
        }
        let n_min = self.particle_counts().into_iter().min().unwrap_or(self.n_particles);
        for (k, est) in self.estimators.iter().enumerate() {
            let field = |f: &str| format!("estimators[{k}].{f}");
            let kind = est.to_kind().map_err(|e| match e {
                Error::Validation { field: f, message } => Error::validation(format!("estimators[{k}].{}", f.trim_start_matches("estimators.")), message),
                other => other,
            })?;
            let dim = if kind.is_diffusion() { m } else { p };
            if kind.is_diffusion() && m == 0 {
                return Err(Error::validation(field("kind"), "model has no diffusion parameters"));
            }
            if kind.min_particles() > n_min {
                return Err(Error::validation(field("kind"), format!("observed indices need N >= {}, smallest N is {n_min}", kind.min_particles())));
            }
            if let Some(pi) = &est.pi {
                if pi.is_empty() || (1..pi.len()).any(|a| pi[..a].contains(&pi[a])) {
                    return Err(Error::validation(field("pi"), "must be non-empty with distinct indices"));
                }
                if est.kind == EstimatorKindName::TripletM && pi.len() < 3 && n_min < 3 {
                    return Err(Error::validation(field("pi"), "cyclic triplets need N >= 3"));
                }
            }
            if est.schedule.scale.len() != dim {
                return Err(Error::validation(field("schedule.scale"), format!("needs {dim} entries")));
            }
            validate_schedule(&est.schedule).map_err(|e| match e {
                Error::Validation { field: f, message } => Error::validation(format!("estimators[{k}].{f}"), message),
                other => other,
            })?;
            est.init.validate(&field("init"), dim)?;
            if let Some(free) = &est.free {
                if free.len() != dim {
                    return Err(Error::validation(field("free"), format!("needs {dim} entries")));
                }
            }
            let free = est.free.clone().unwrap_or_else(|| vec![true; dim]);
            if free.iter().zip(&est.schedule.scale).any(|(f, s)| *f && *s <= 0.0) {
                return Err(Error::validation(field("schedule.scale"), "free parameters need a positive rate"));
            }
            if let Some(r) = &est.rmsprop {
                if !(r.rho >= 0.0 && r.rho < 1.0) || !(r.eps > 0.0) {
                    return Err(Error::validation(field("rmsprop"), "needs rho in [0, 1) and eps > 0"));
                }
            }
            if est.weighting.is_some() {
                self.model_spec_weighted(est.weighting).map_err(|e| Error::validation(field("weighting"), e.to_string()))?;
            }
        }
        if let Some(s) = &self.surface {
            s.validate(p)?;
        }
        if let Some(d) = &self.diagnose {
            d.validate(self)?;
        }
        Ok(())
    }
}
