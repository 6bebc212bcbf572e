use super::{ParticleEnsemble, ParticleNoise};
use crate::error::{Error, Result};
use crate::models::{field_mean, Diffusion, ModelSpec};
use crate::scalar::Scalar;

/// Largest admissible state magnitude before a step is declared a blowup.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Everything one Euler step produced.
///
/// `dx = drift * dt + sigma * dw` holds exactly, with `sigma` already masked.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementBatch<T> {
    pub n_particles: usize,
    pub state_dim: usize,
    pub dt: T,
    /// Brownian increments, `N x d`.
    pub dw: Vec<T>,
    /// State increments, `N x d`.
    pub dx: Vec<T>,
    /// Realized quadratic variation `dx dx^T`, `N x d x d`.
    pub dqv: Vec<T>,
    /// Drift `B(theta_0, x^i, mu^N)` used by the step, `N x d`.
    pub drift: Vec<T>,
    /// Diffusion applied to each particle, `N x d x d`.
    pub sigma: Vec<T>,
}

impl<T: Scalar> IncrementBatch<T> {
    fn zeros(n: usize, d: usize, dt: T) -> Self {
        Self {
            n_particles: n,
            state_dim: d,
            dt,
            dw: vec![T::zero(); n * d],
            dx: vec![T::zero(); n * d],
            dqv: vec![T::zero(); n * d * d],
            drift: vec![T::zero(); n * d],
            sigma: vec![T::zero(); n * d * d],
        }
    }

    #[inline]
    pub fn dx_of(&self, i: usize) -> &[T] {
        &self.dx[i * self.state_dim..(i + 1) * self.state_dim]
    }

    #[inline]
    pub fn dw_of(&self, i: usize) -> &[T] {
        &self.dw[i * self.state_dim..(i + 1) * self.state_dim]
    }

    #[inline]
    pub fn dqv_of(&self, i: usize) -> &[T] {
        let dd = self.state_dim * self.state_dim;
        &self.dqv[i * dd..(i + 1) * dd]
    }
}

/// One Euler-Maruyama step of the particle system under `theta_true`
/// (and `eta_true` for parameterized diffusions).
///
/// `step` is only used to label errors.
pub fn advance_step<T: Scalar>(
    ensemble: &ParticleEnsemble<T>,
    model: &ModelSpec<T>,
    theta_true: &[T],
    eta_true: Option<&[T]>,
    dt: T,
    noise: &mut ParticleNoise,
    step: u64,
) -> Result<(ParticleEnsemble<T>, IncrementBatch<T>)> {
    let n = ensemble.n_particles();
    let d = ensemble.state_dim();
    if d != model.state_dim() {
        return Err(Error::InvalidInput("ensemble state dim does not match model".into()));
    }
    if theta_true.len() != model.param_dim() {
        return Err(Error::InvalidInput("true parameter has wrong dimension".into()));
    }
    if !model.admissible().contains(theta_true) {
        return Err(Error::InvalidInput("true parameter outside the admissible set".into()));
    }
    if noise.n_particles() != n || noise.state_dim() != d {
        return Err(Error::InvalidInput("noise source shape does not match ensemble".into()));
    }
    let mut inc = IncrementBatch::zeros(n, d, dt);
    noise.fill_increments(dt, &mut inc.dw)?;
    model.pair_model().drift_all(theta_true, ensemble, &mut inc.drift);

    let mask = model.noise_mask();
    let dd = d * d;
    match model.diffusion() {
        Diffusion::Constant(sigma) => {
            for i in 0..n {
                inc.sigma[i * dd..(i + 1) * dd].copy_from_slice(sigma);
            }
        }
        Diffusion::Field(field) => {
            let eta = eta_true.ok_or_else(|| Error::InvalidInput("true diffusion parameters required".into()))?;
            if eta.len() != field.param_dim() {
                return Err(Error::InvalidInput("true diffusion parameter has wrong dimension".into()));
            }
            for i in 0..n {
                let (s, _) = field_mean(field.as_ref(), eta, ensemble.particle(i), ensemble);
                inc.sigma[i * dd..(i + 1) * dd].copy_from_slice(&s);
            }
        }
    }
    for i in 0..n {
        let s = &mut inc.sigma[i * dd..(i + 1) * dd];
        for (r, on) in mask.iter().enumerate() {
            if !on {
                s[r * d..(r + 1) * d].iter_mut().for_each(|v| *v = T::zero());
            }
        }
    }

    let mut next = ensemble.clone();
    next.time = ensemble.time + dt;
    let limit = T::lit(BLOWUP_THRESHOLD);
    for i in 0..n {
        for r in 0..d {
            let mut noise_term = T::zero();
            for c in 0..d {
                noise_term += inc.sigma[i * dd + r * d + c] * inc.dw[i * d + c];
            }
            inc.dx[i * d + r] = inc.drift[i * d + r] * dt + noise_term;
        }
        for r in 0..d {
            for c in 0..d {
                inc.dqv[i * dd + r * d + c] = inc.dx[i * d + r] * inc.dx[i * d + c];
            }
        }
        let row = next.particle_mut(i);
        for (k, v) in row.iter_mut().enumerate() {
            *v += inc.dx[i * d + k];
            if !v.is_finite() {
                return Err(Error::SimulationBlowup { step, reason: format!("particle {i} became non-finite") });
            }
            if v.abs() > limit {
                return Err(Error::SimulationBlowup {
                    step,
                    reason: format!("particle {i} exceeded |x| > {BLOWUP_THRESHOLD:e}"),
                });
            }
        }
    }
    Ok((next, inc))
}
