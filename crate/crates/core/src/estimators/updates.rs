use serde::{Deserialize, Serialize};

use super::{LearningRateSchedule, Triplet, TripletSet};
use crate::error::{Error, Result};
use crate::models::{Diffusion, ModelSpec, ParamBox};
use crate::scalar::Scalar;
use crate::sde::{IncrementBatch, ParticleEnsemble};

/// Current estimate plus the bookkeeping carried between updates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorState<T> {
    pub theta: Vec<T>,
    pub step_index: u64,
    /// RMSProp second-moment accumulator.
    pub preconditioner_acc: Vec<T>,
    /// Set once a proposal leaves the admissible set; never cleared.
    pub frozen: bool,
}

impl<T: Scalar> EstimatorState<T> {
    pub fn new(theta: Vec<T>) -> Self {
        let p = theta.len();
        Self { theta, step_index: 0, preconditioner_acc: vec![T::zero(); p], frozen: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct RmsProp<T> {
    #[serde(default = "default_rho")]
    pub rho: T,
    #[serde(default = "default_eps")]
    pub eps: T,
}

fn default_rho<T: Scalar>() -> T {
    T::lit(0.99)
}

fn default_eps<T: Scalar>() -> T {
    T::lit(1e-8)
}

impl<T: Scalar> Default for RmsProp<T> {
    fn default() -> Self {
        Self { rho: default_rho(), eps: default_eps() }
    }
}

/// How a search direction turns into a parameter step.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateSettings<T> {
    pub schedule: LearningRateSchedule<T>,
    /// Parameters with `false` are never moved.
    pub free: Vec<bool>,
    pub rmsprop: Option<RmsProp<T>>,
}

impl<T: Scalar> UpdateSettings<T> {
    pub fn plain(schedule: LearningRateSchedule<T>) -> Self {
        let p = schedule.scale.len();
        Self { schedule, free: vec![true; p], rmsprop: None }
    }
}

/// Rescales a raw step by the running RMS of the gradient `raw / gamma`.
///
/// Entries with `gamma = 0` contribute a zero gradient.
pub fn rmsprop_precondition<T: Scalar>(raw: &[T], gamma: &[T], acc: &mut [T], cfg: &RmsProp<T>) -> Vec<T> {
    raw.iter()
        .zip(gamma)
        .zip(acc.iter_mut())
        .map(|((r, g), a)| {
            let grad = if *g > T::zero() { *r / *g } else { T::zero() };
            *a = cfg.rho * *a + (T::one() - cfg.rho) * grad * grad;
            *r / (a.sqrt() + cfg.eps)
        })
        .collect()
}

/// Freeze-forever constraint: an inadmissible proposal is rejected and the
/// estimator stops moving.
pub fn project_constraint<T: Scalar>(state: &mut EstimatorState<T>, proposal: Vec<T>, admissible: &ParamBox<T>) {
    if state.frozen {
        return;
    }
    if admissible.contains(&proposal) {
        state.theta = proposal;
    } else {
        state.frozen = true;
    }
}

/// `theta <- theta - gamma(t) * direction`, with masking, preconditioning and
/// the constraint applied in that order.
fn apply_direction<T: Scalar>(
    state: &mut EstimatorState<T>,
    direction: &[T],
    settings: &UpdateSettings<T>,
    t: T,
    admissible: &ParamBox<T>,
    label: &str,
) -> Result<()> {
    state.step_index += 1;
    if state.frozen {
        return Ok(());
    }
    let gamma = settings.schedule.lr_value(t);
    if gamma.len() != direction.len() || settings.free.len() != direction.len() {
        return Err(Error::InvalidInput(format!("{label}: learning-rate or free-mask length does not match parameters")));
    }
    let raw: Vec<T> = direction
        .iter()
        .zip(&gamma)
        .zip(&settings.free)
        .map(|((d, g), f)| if *f { *g * *d } else { T::zero() })
        .collect();
    let step = match &settings.rmsprop {
        Some(cfg) => rmsprop_precondition(&raw, &gamma, &mut state.preconditioner_acc, cfg),
        None => raw,
    };
    let proposal: Vec<T> = state.theta.iter().zip(&step).map(|(th, s)| *th - *s).collect();
    if !proposal.iter().all(|v| v.is_finite()) {
        return Err(Error::EstimatorDivergence { estimator: label.to_string(), step: state.step_index - 1 });
    }
    project_constraint(state, proposal, admissible);
    Ok(())
}

/// `out_a += sum_c grad[a, c] * (W r)_c`.
fn accumulate_direction<T: Scalar>(model: &ModelSpec<T>, grad: &[T], residual: &[T], wr: &mut [T], out: &mut [T]) {
    let d = residual.len();
    model.apply_weight(residual, wr);
    for (a, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for c in 0..d {
            acc += grad[a * d + c] * wr[c];
        }
        *o += acc;
    }
}

/// `G(theta, x^i) W (B(theta, x^i) dt - dx^i)` for one particle.
fn averaged_direction<T: Scalar>(
    theta: &[T],
    model: &ModelSpec<T>,
    i: usize,
    ensemble: &ParticleEnsemble<T>,
    dx_i: &[T],
    dt: T,
    out: &mut [T],
) {
    let pm = model.pair_model();
    let (p, d) = (model.param_dim(), model.state_dim());
    let x = ensemble.particle(i);
    let mut drift = vec![T::zero(); d];
    let mut grad = vec![T::zero(); p * d];
    pm.drift_mean(theta, x, ensemble, &mut drift);
    pm.grad_mean(theta, x, ensemble, &mut grad);
    let residual: Vec<T> = drift.iter().zip(dx_i).map(|(b, dx)| *b * dt - *dx).collect();
    let mut wr = vec![T::zero(); d];
    accumulate_direction(model, &grad, &residual, &mut wr, out);
}

fn check_particle<T: Scalar>(i: usize, ensemble: &ParticleEnsemble<T>, inc: &IncrementBatch<T>) -> Result<()> {
    if i >= ensemble.n_particles() || inc.n_particles != ensemble.n_particles() {
        return Err(Error::InvalidInput(format!("particle {i} not observed (N = {})", ensemble.n_particles())));
    }
    Ok(())
}

/// Full-observation update at particle `i`:
/// `theta <- theta - gamma(t) G W (B dt - dx^i)`.
pub fn update_averaged<T: Scalar>(
    state: &mut EstimatorState<T>,
    model: &ModelSpec<T>,
    i: usize,
    ensemble: &ParticleEnsemble<T>,
    increments: &IncrementBatch<T>,
    settings: &UpdateSettings<T>,
    t: T,
) -> Result<()> {
    check_particle(i, ensemble, increments)?;
    let mut dir = vec![T::zero(); model.param_dim()];
    averaged_direction(&state.theta, model, i, ensemble, increments.dx_of(i), increments.dt, &mut dir);
    apply_direction(state, &dir, settings, t, model.admissible(), "averaged")
}

/// The only data a three-particle update may read: three states and the
/// increment of the first.
#[derive(Debug, Clone, Copy)]
pub struct TripletObservation<'a, T> {
    pub x_i: &'a [T],
    pub x_j: &'a [T],
    pub x_k: &'a [T],
    pub dx_i: &'a [T],
    pub dt: T,
}

impl<'a, T: Scalar> TripletObservation<'a, T> {
    pub fn gather(triplet: Triplet, ensemble: &'a ParticleEnsemble<T>, increments: &'a IncrementBatch<T>) -> Result<Self> {
        if triplet.max_index() >= ensemble.n_particles() {
            return Err(Error::InvalidInput(format!("triplet {triplet:?} out of range for N = {}", ensemble.n_particles())));
        }
        Ok(Self {
            x_i: ensemble.particle(triplet.i),
            x_j: ensemble.particle(triplet.j),
            x_k: ensemble.particle(triplet.k),
            dx_i: increments.dx_of(triplet.i),
            dt: increments.dt,
        })
    }
}

fn triplet_direction<T: Scalar>(theta: &[T], model: &ModelSpec<T>, obs: &TripletObservation<'_, T>, out: &mut [T]) {
    let pm = model.pair_model();
    let (p, d) = (model.param_dim(), model.state_dim());
    let mut drift = vec![T::zero(); d];
    let mut grad = vec![T::zero(); p * d];
    pm.grad_pair(theta, obs.x_i, obs.x_j, &mut grad);
    pm.drift_pair(theta, obs.x_i, obs.x_k, &mut drift);
    let residual: Vec<T> = drift.iter().zip(obs.dx_i).map(|(b, dx)| *b * obs.dt - *dx).collect();
    let mut wr = vec![T::zero(); d];
    accumulate_direction(model, &grad, &residual, &mut wr, out);
}

/// Three-particle update:
/// `theta <- theta - gamma(t) g(theta, x^i, x^j) W (b(theta, x^i, x^k) dt - dx^i)`.
pub fn update_three_particle<T: Scalar>(
    state: &mut EstimatorState<T>,
    model: &ModelSpec<T>,
    obs: &TripletObservation<'_, T>,
    settings: &UpdateSettings<T>,
    t: T,
) -> Result<()> {
    let mut dir = vec![T::zero(); model.param_dim()];
    triplet_direction(&state.theta, model, obs, &mut dir);
    apply_direction(state, &dir, settings, t, model.admissible(), "triplet")
}

/// Averaged update over an index set: the directions of every `i` in `pi`
/// (visited in sorted order) are averaged before a single step.
pub fn update_m_averaged_full<T: Scalar>(
    state: &mut EstimatorState<T>,
    model: &ModelSpec<T>,
    pi: &[usize],
    ensemble: &ParticleEnsemble<T>,
    increments: &IncrementBatch<T>,
    settings: &UpdateSettings<T>,
    t: T,
) -> Result<()> {
    if pi.is_empty() {
        return Err(Error::InvalidInput("index set must be non-empty".into()));
    }
    let mut sorted = pi.to_vec();
    sorted.sort_unstable();
    let p = model.param_dim();
    let mut dir = vec![T::zero(); p];
    for &i in &sorted {
        check_particle(i, ensemble, increments)?;
        averaged_direction(&state.theta, model, i, ensemble, increments.dx_of(i), increments.dt, &mut dir);
    }
    let m = T::from_usize_lossy(sorted.len());
    dir.iter_mut().for_each(|v| *v /= m);
    apply_direction(state, &dir, settings, t, model.admissible(), "averaged_m")
}

/// Three-particle update averaged over the cyclic triplets `C(Pi)`.
pub fn update_m_averaged_triplet<T: Scalar>(
    state: &mut EstimatorState<T>,
    model: &ModelSpec<T>,
    triplets: &TripletSet,
    ensemble: &ParticleEnsemble<T>,
    increments: &IncrementBatch<T>,
    settings: &UpdateSettings<T>,
    t: T,
) -> Result<()> {
    if triplets.is_empty() {
        return Err(Error::InvalidInput("triplet set must be non-empty".into()));
    }
    let mut dir = vec![T::zero(); model.param_dim()];
    for tr in triplets.triplets() {
        let obs = TripletObservation::gather(*tr, ensemble, increments)?;
        triplet_direction(&state.theta, model, &obs, &mut dir);
    }
    let m = T::from_usize_lossy(triplets.len());
    dir.iter_mut().for_each(|v| *v /= m);
    apply_direction(state, &dir, settings, t, model.admissible(), "triplet_m")
}

/// Which diffusion is matched against the realized quadratic variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiffusionForm {
    /// Mean-field diffusion `Sigma(eta, x^i, mu^N)`.
    Averaged { particle: usize },
    /// Gradient from `sigma(eta, x^i, x^j)`, residual from `sigma(eta, x^i, x^k)`.
    Pairwise { triplet: Triplet },
}

impl DiffusionForm {
    pub fn particle(&self) -> usize {
        match self {
            DiffusionForm::Averaged { particle } => *particle,
            DiffusionForm::Pairwise { triplet } => triplet.i,
        }
    }

    pub fn max_index(&self) -> usize {
        match self {
            DiffusionForm::Averaged { particle } => *particle,
            DiffusionForm::Pairwise { triplet } => triplet.max_index(),
        }
    }
}

/// Diffusion-parameter update
/// `eta <- eta - delta(t) d_eta(S S^T) : (S S^T dt - dQV)`,
/// restricted to the noise-driven components.
#[allow(clippy::too_many_arguments)]
pub fn update_diffusion<T: Scalar>(
    state: &mut EstimatorState<T>,
    model: &ModelSpec<T>,
    form: DiffusionForm,
    ensemble: &ParticleEnsemble<T>,
    increments: &IncrementBatch<T>,
    settings: &UpdateSettings<T>,
    t: T,
    admissible: &ParamBox<T>,
) -> Result<()> {
    let field = match model.diffusion() {
        Diffusion::Field(f) => f.clone(),
        Diffusion::Constant(_) => {
            return Err(Error::InvalidConfig(format!("model `{}` has no diffusion parameters", model.id())))
        }
    };
    if form.max_index() >= ensemble.n_particles() {
        return Err(Error::InvalidInput("diffusion estimator index out of range".into()));
    }
    let d = model.state_dim();
    let m = field.param_dim();
    let eta = &state.theta;
    let i = form.particle();
    let (grad_sq, resid_sigma) = match form {
        DiffusionForm::Averaged { particle } => {
            let (sigma, grad_sq) = model.eval_diffusion(Some(eta), particle, ensemble)?;
            (grad_sq.expect("parameterized diffusion"), sigma)
        }
        DiffusionForm::Pairwise { triplet } => {
            let x = ensemble.particle(triplet.i);
            let mut sj = vec![T::zero(); d * d];
            let mut dj = vec![T::zero(); m * d * d];
            field.sigma_pair(eta, x, ensemble.particle(triplet.j), &mut sj);
            field.sigma_pair_grad(eta, x, ensemble.particle(triplet.j), &mut dj);
            let mut sk = vec![T::zero(); d * d];
            field.sigma_pair(eta, x, ensemble.particle(triplet.k), &mut sk);
            (crate::models::sigma_sq_grad(&sj, &dj, d), sk)
        }
    };
    let ssq = crate::models::sigma_sq(&resid_sigma, d);
    let dqv = increments.dqv_of(i);
    let mask = model.noise_mask();
    let mut dir = vec![T::zero(); m];
    for (a, o) in dir.iter_mut().enumerate() {
        let mut acc = T::zero();
        for r in 0..d {
            for c in 0..d {
                if mask[r] && mask[c] {
                    let k = r * d + c;
                    acc += grad_sq[a * d * d + k] * (ssq[k] * increments.dt - dqv[k]);
                }
            }
        }
        *o = acc;
    }
    apply_direction(state, &dir, settings, t, admissible, "diffusion")
}
