use std::io::Write;

use serde::Serialize;

use super::{
    build_cyclic_triplets, update_averaged, update_diffusion, update_m_averaged_full, update_m_averaged_triplet,
    update_three_particle, DiffusionForm, EstimatorState, Triplet, TripletObservation, TripletSet, UpdateSettings,
};
use crate::error::{Error, Result};
use crate::models::{ModelSpec, ParamBox};
use crate::scalar::Scalar;
use crate::sde::{Observer, StepView};

/// Which update rule an estimator runs and what it observes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorKind {
    Averaged {
        particle: usize,
    },
    Triplet {
        triplet: Triplet,
    },
    AveragedM {
        pi: Vec<usize>,
    },
    TripletM {
        pi: Vec<usize>,
    },
    Diffusion {
        form: DiffusionForm,
    },
}

impl EstimatorKind {
    /// Identifier used in the estimate CSVs.
    pub fn id(&self) -> &'static str {
        match self {
            EstimatorKind::Averaged { .. } => "averaged",
            EstimatorKind::Triplet { .. } => "triplet",
            EstimatorKind::AveragedM { .. } => "averaged_m",
            EstimatorKind::TripletM { .. } => "triplet_m",
            EstimatorKind::Diffusion { .. } => "diffusion",
        }
    }

    pub fn is_diffusion(&self) -> bool {
        matches!(self, EstimatorKind::Diffusion { .. })
    }

    /// Smallest particle count the estimator can run on.
    pub fn min_particles(&self) -> usize {
        match self {
            EstimatorKind::Averaged { particle } => particle + 1,
            EstimatorKind::Triplet { triplet } => triplet.max_index() + 1,
            EstimatorKind::AveragedM { pi } => pi.iter().max().map_or(1, |m| m + 1),
            EstimatorKind::TripletM { pi } => pi.iter().max().map_or(1, |m| m + 1).max(3),
            EstimatorKind::Diffusion { form } => form.max_index() + 1,
        }
    }
}

/// One recorded estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord<T> {
    pub step: u64,
    pub time: T,
    pub values: Vec<T>,
    pub frozen: bool,
}

/// An estimator attached to a trajectory: update rule, state, and the
/// recorded path.
#[derive(Debug, Clone)]
pub struct Estimator<T: Scalar> {
    label: String,
    kind: EstimatorKind,
    model: ModelSpec<T>,
    settings: UpdateSettings<T>,
    admissible: ParamBox<T>,
    state: EstimatorState<T>,
    triplets: Option<TripletSet>,
    param_names: Vec<String>,
    record_every: u64,
    history: Vec<EstimateRecord<T>>,
    tail_start: u64,
    tail_sum: Vec<T>,
    tail_count: u64,
}

impl<T: Scalar> Estimator<T> {
    /// `model` carries the weighting the estimator uses; `admissible` is
    /// the constraint set of the estimated vector (theta, or eta for diffusion).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: Option<String>,
        kind: EstimatorKind,
        model: ModelSpec<T>,
        settings: UpdateSettings<T>,
        admissible: ParamBox<T>,
        theta_init: Vec<T>,
        n_particles: usize,
        record_every: u64,
    ) -> Result<Self> {
        let label = label.unwrap_or_else(|| kind.id().to_string());
        let dim = if kind.is_diffusion() { model.diffusion_param_dim() } else { model.param_dim() };
        if kind.is_diffusion() && dim == 0 {
            return Err(Error::validation("estimators.kind", format!("model `{}` has a constant diffusion", model.id())));
        }
        if theta_init.len() != dim {
            return Err(Error::validation("estimators.init", format!("{label}: expected {dim} initial values")));
        }
        if settings.schedule.scale.len() != dim || settings.free.len() != dim {
            return Err(Error::validation("estimators.schedule.scale", format!("{label}: needs {dim} entries")));
        }
        settings.schedule.check()?;
        if admissible.dim() != dim {
            return Err(Error::validation("admissible", format!("{label}: box must have {dim} entries")));
        }
        if !admissible.contains(&theta_init) {
            return Err(Error::validation("estimators.init", format!("{label}: initial estimate not admissible")));
        }
        if record_every == 0 {
            return Err(Error::validation("record_every", "must be at least 1"));
        }
        if kind.min_particles() > n_particles {
            return Err(Error::validation(
                "estimators",
                format!("{label}: observed indices need N >= {}, got {n_particles}", kind.min_particles()),
            ));
        }
        let triplets = match &kind {
            EstimatorKind::TripletM { pi } => Some(build_cyclic_triplets(pi, n_particles)?),
            EstimatorKind::AveragedM { pi } => {
                // reuse the index checks (range, duplicates)
                if pi.is_empty() || (1..pi.len()).any(|a| pi[..a].contains(&pi[a])) {
                    return Err(Error::validation("estimators.pi", "must be non-empty with distinct indices"));
                }
                None
            }
            _ => None,
        };
        let param_names = if kind.is_diffusion() { model.diffusion_param_names() } else { model.param_names() };
        let state = EstimatorState::new(theta_init);
        let history = vec![EstimateRecord { step: 0, time: T::zero(), values: state.theta.clone(), frozen: false }];
        Ok(Self {
            label,
            kind,
            model,
            settings,
            admissible,
            state,
            triplets,
            param_names,
            record_every,
            history,
            tail_start: u64::MAX,
            tail_sum: vec![T::zero(); dim],
            tail_count: 0,
        })
    }

    /// Average the estimate over every step whose index is `>= start`.
    pub fn with_tail_start(mut self, start: u64) -> Self {
        self.tail_start = start;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &EstimatorKind {
        &self.kind
    }

    pub fn state(&self) -> &EstimatorState<T> {
        &self.state
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn history(&self) -> &[EstimateRecord<T>] {
        &self.history
    }

    /// Mean estimate over the tail window, if any step fell into it.
    pub fn tail_mean(&self) -> Option<Vec<T>> {
        if self.tail_count == 0 {
            return None;
        }
        let n = T::lit(self.tail_count as f64);
        Some(self.tail_sum.iter().map(|s| *s / n).collect())
    }

    fn hold_fixed(&mut self, theta_true: &[T]) {
        if self.kind.is_diffusion() {
            return;
        }
        for (a, free) in self.settings.free.iter().enumerate() {
            if !free {
                self.state.theta[a] = theta_true[a];
            }
        }
    }

    /// Writes `step,time,estimator_id,param,value,frozen` rows (no header).
    pub fn write_rows<W: Write>(&self, out: &mut W) -> Result<()> {
        for rec in &self.history {
            for (name, v) in self.param_names.iter().zip(&rec.values) {
                writeln!(out, "{},{},{},{},{},{}", rec.step, rec.time, self.label, name, v, rec.frozen)?;
            }
        }
        Ok(())
    }
}

pub const ESTIMATE_CSV_HEADER: &str = "step,time,estimator_id,param,value,frozen";

impl<T: Scalar> Observer<T> for Estimator<T> {
    fn observe(&mut self, view: &StepView<'_, T>) -> Result<()> {
        if view.step == 0 {
            self.hold_fixed(view.theta_true);
            self.history[0].values = self.state.theta.clone();
        }
        let t = view.time();
        let (ens, inc) = (view.before, view.increments);
        let result = match &self.kind {
            EstimatorKind::Averaged { particle } => {
                update_averaged(&mut self.state, &self.model, *particle, ens, inc, &self.settings, t)
            }
            EstimatorKind::Triplet { triplet } => {
                let obs = TripletObservation::gather(*triplet, ens, inc)?;
                update_three_particle(&mut self.state, &self.model, &obs, &self.settings, t)
            }
            EstimatorKind::AveragedM { pi } => {
                update_m_averaged_full(&mut self.state, &self.model, pi, ens, inc, &self.settings, t)
            }
            EstimatorKind::TripletM { .. } => {
                let set = self.triplets.as_ref().expect("built at construction");
                update_m_averaged_triplet(&mut self.state, &self.model, set, ens, inc, &self.settings, t)
            }
            EstimatorKind::Diffusion { form } => {
                update_diffusion(&mut self.state, &self.model, *form, ens, inc, &self.settings, t, &self.admissible)
            }
        };
        result.map_err(|e| match e {
            Error::EstimatorDivergence { step, .. } => Error::EstimatorDivergence { estimator: self.label.clone(), step },
            other => other,
        })?;
        self.hold_fixed(view.theta_true);
        let s = view.step + 1;
        if view.step >= self.tail_start {
            for (acc, v) in self.tail_sum.iter_mut().zip(&self.state.theta) {
                *acc += *v;
            }
            self.tail_count += 1;
        }
        if s % self.record_every == 0 {
            self.history.push(EstimateRecord {
                step: s,
                time: view.after.time,
                values: self.state.theta.clone(),
                frozen: self.state.frozen,
            });
        }
        Ok(())
    }
}
