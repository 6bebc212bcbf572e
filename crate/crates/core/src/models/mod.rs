//! Pairwise drift models, diffusion specifications and the model zoo.
//!
//! A model supplies the pairwise drift `b(theta, x, y)` and its parameter
//! gradient `g = d b / d theta`. The particle drift is the empirical average
//! `B(theta, x^i, mu^N) = (1/N) sum_j b(theta, x^i, x^j)`, self term included.

mod truth;
mod zoo;

use std::fmt::Debug;
use std::sync::Arc;

pub use truth::TruthSchedule;
pub use zoo::{
    build_model, build_model_with_weighting, model_catalog, CuckerSmale, DoubleWell, FitzHughNagumo, Kuramoto, Linear, ModelInfo,
    Vol32Diffusion, Vol32Drift, MODEL_IDS,
};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sde::ParticleEnsemble;

/// How drift residuals are weighted in the contrast and in the updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// `(sigma sigma^T)^{-1}` restricted to the noise mask.
    InverseDiffusion,
    /// Identity; used for degenerate noise and state-dependent diffusions.
    Identity,
}

/// Pairwise interaction drift and its parameter gradient.
///
/// The gradient layout is `p x d` row-major: `out[a * d + c] = d b_c / d theta_a`.
pub trait PairModel<T: Scalar>: Debug + Send + Sync {
    fn id(&self) -> &'static str;
    fn param_dim(&self) -> usize;
    fn state_dim(&self) -> usize;

    fn param_names(&self) -> Vec<String> {
        (1..=self.param_dim()).map(|k| format!("theta{k}")).collect()
    }

    /// Components of the state driven by Brownian noise.
    fn noise_mask(&self) -> Vec<bool> {
        vec![true; self.state_dim()]
    }

    fn default_weighting(&self) -> Weighting {
        Weighting::InverseDiffusion
    }

    fn drift_pair(&self, theta: &[T], x: &[T], y: &[T], out: &mut [T]);

    fn grad_pair(&self, theta: &[T], x: &[T], y: &[T], out: &mut [T]);

    /// `B(theta, x, mu^N)`; the default is the brute-force pairwise average.
    fn drift_mean(&self, theta: &[T], x: &[T], ensemble: &ParticleEnsemble<T>, out: &mut [T]) {
        let mut tmp = vec![T::zero(); self.state_dim()];
        out.iter_mut().for_each(|v| *v = T::zero());
        for y in ensemble.rows() {
            self.drift_pair(theta, x, y, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += *t;
            }
        }
        let n = T::from_usize_lossy(ensemble.n_particles());
        out.iter_mut().for_each(|v| *v /= n);
    }

    /// `G(theta, x, mu^N)`, the ensemble average of `g`.
    fn grad_mean(&self, theta: &[T], x: &[T], ensemble: &ParticleEnsemble<T>, out: &mut [T]) {
        let mut tmp = vec![T::zero(); self.param_dim() * self.state_dim()];
        out.iter_mut().for_each(|v| *v = T::zero());
        for y in ensemble.rows() {
            self.grad_pair(theta, x, y, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += *t;
            }
        }
        let n = T::from_usize_lossy(ensemble.n_particles());
        out.iter_mut().for_each(|v| *v /= n);
    }

    /// Drift of every particle, written row-major into `out` (length N*d).
    fn drift_all(&self, theta: &[T], ensemble: &ParticleEnsemble<T>, out: &mut [T]) {
        let d = self.state_dim();
        for (i, chunk) in out.chunks_exact_mut(d).enumerate() {
            self.drift_mean(theta, ensemble.particle(i), ensemble, chunk);
        }
    }
}

/// Parameterized, state-dependent pairwise diffusion `sigma(eta, x, y)`.
///
/// The particle diffusion is `Sigma(eta, x, mu^N) = (1/N) sum_j sigma(eta, x, x^j)`.
pub trait DiffusionField<T: Scalar>: Debug + Send + Sync {
    fn param_dim(&self) -> usize;
    fn state_dim(&self) -> usize;

    fn param_names(&self) -> Vec<String> {
        (1..=self.param_dim()).map(|k| format!("eta{k}")).collect()
    }

    /// `d x d` row-major.
    fn sigma_pair(&self, eta: &[T], x: &[T], y: &[T], out: &mut [T]);

    /// `m x d x d`: `out[a * d * d + r * d + c] = d sigma_rc / d eta_a`.
    fn sigma_pair_grad(&self, eta: &[T], x: &[T], y: &[T], out: &mut [T]);
}

#[derive(Debug, Clone)]
pub enum Diffusion<T: Scalar> {
    /// Constant `d x d` matrix, row-major.
    Constant(Vec<T>),
    Field(Arc<dyn DiffusionField<T>>),
}

impl<T: Scalar> Diffusion<T> {
    /// `sigma * I` on the masked components, zero elsewhere.
    pub fn isotropic(sigma: T, mask: &[bool]) -> Self {
        let d = mask.len();
        let mut m = vec![T::zero(); d * d];
        for (c, on) in mask.iter().enumerate() {
            if *on {
                m[c * d + c] = sigma;
            }
        }
        Diffusion::Constant(m)
    }

    pub fn param_dim(&self) -> usize {
        match self {
            Diffusion::Constant(_) => 0,
            Diffusion::Field(f) => f.param_dim(),
        }
    }
}

/// Closed box of admissible parameters, bounds possibly infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> ParamBox<T> {
    pub fn unbounded(p: usize) -> Self {
        Self { lower: vec![T::neg_infinity(); p], upper: vec![T::infinity(); p] }
    }

    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidInput("admissible box bounds must be non-empty and equal length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidInput("admissible box needs lower <= upper".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, theta: &[T]) -> bool {
        theta.len() == self.dim()
            && theta.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower.iter().all(|l| l.is_infinite()) && self.upper.iter().all(|u| u.is_infinite())
    }
}

/// A fully specified model: drift family, diffusion, weighting and admissible set.
#[derive(Debug, Clone)]
pub struct ModelSpec<T: Scalar> {
    drift: Arc<dyn PairModel<T>>,
    diffusion: Diffusion<T>,
    weighting: Weighting,
    admissible: ParamBox<T>,
    weight_matrix: Option<Vec<T>>,
}

impl<T: Scalar> ModelSpec<T> {
    pub fn new(
        drift: Arc<dyn PairModel<T>>,
        diffusion: Diffusion<T>,
        weighting: Weighting,
        admissible: ParamBox<T>,
    ) -> Result<Self> {
        let d = drift.state_dim();
        let p = drift.param_dim();
        if admissible.dim() != p {
            return Err(Error::InvalidInput(format!("admissible box has dim {}, model has p={p}", admissible.dim())));
        }
        match &diffusion {
            Diffusion::Constant(m) if m.len() != d * d => {
                return Err(Error::InvalidInput(format!("constant diffusion must be {d}x{d}")));
            }
            Diffusion::Field(f) if f.state_dim() != d => {
                return Err(Error::InvalidInput("diffusion field state dim mismatch".into()));
            }
            _ => {}
        }
        let weight_matrix = match weighting {
            Weighting::Identity => None,
            Weighting::InverseDiffusion => match &diffusion {
                Diffusion::Constant(sigma) => Some(masked_inverse_covariance(sigma, &drift.noise_mask())?),
                Diffusion::Field(_) => {
                    return Err(Error::InvalidConfig(
                        "inverse-diffusion weighting needs a constant diffusion".into(),
                    ))
                }
            },
        };
        Ok(Self { drift, diffusion, weighting, admissible, weight_matrix })
    }

    pub fn id(&self) -> &'static str {
        self.drift.id()
    }
    pub fn param_dim(&self) -> usize {
        self.drift.param_dim()
    }
    pub fn state_dim(&self) -> usize {
        self.drift.state_dim()
    }
    pub fn param_names(&self) -> Vec<String> {
        self.drift.param_names()
    }
    pub fn noise_mask(&self) -> Vec<bool> {
        self.drift.noise_mask()
    }
    pub fn weighting(&self) -> Weighting {
        self.weighting
    }
    pub fn admissible(&self) -> &ParamBox<T> {
        &self.admissible
    }
    pub fn diffusion(&self) -> &Diffusion<T> {
        &self.diffusion
    }
    pub fn pair_model(&self) -> &dyn PairModel<T> {
        self.drift.as_ref()
    }
    pub fn diffusion_param_dim(&self) -> usize {
        self.diffusion.param_dim()
    }
    pub fn diffusion_param_names(&self) -> Vec<String> {
        match &self.diffusion {
            Diffusion::Constant(_) => Vec::new(),
            Diffusion::Field(f) => f.param_names(),
        }
    }

    /// Weighting matrix for `InverseDiffusion`; `None` means identity.
    pub fn weight_matrix(&self) -> Option<&[T]> {
        self.weight_matrix.as_deref()
    }

    pub fn with_admissible(mut self, admissible: ParamBox<T>) -> Result<Self> {
        if admissible.dim() != self.param_dim() {
            return Err(Error::InvalidInput("admissible box dimension mismatch".into()));
        }
        self.admissible = admissible;
        Ok(self)
    }

    fn check_theta(&self, theta: &[T]) -> Result<()> {
        if theta.len() != self.param_dim() {
            return Err(Error::InvalidInput(format!(
                "{}: expected {} parameters, got {}",
                self.id(),
                self.param_dim(),
                theta.len()
            )));
        }
        Ok(())
    }

    fn check_state(&self, x: &[T]) -> Result<()> {
        if x.len() != self.state_dim() {
            return Err(Error::InvalidInput(format!(
                "{}: expected state of dim {}, got {}",
                self.id(),
                self.state_dim(),
                x.len()
            )));
        }
        Ok(())
    }

    fn check_ensemble(&self, ensemble: &ParticleEnsemble<T>) -> Result<()> {
        if ensemble.state_dim() != self.state_dim() {
            return Err(Error::InvalidInput("ensemble state dim does not match model".into()));
        }
        Ok(())
    }

    /// `b(theta, x, y)`.
    pub fn eval_drift_pair(&self, theta: &[T], x: &[T], y: &[T]) -> Result<Vec<T>> {
        self.check_theta(theta)?;
        self.check_state(x)?;
        self.check_state(y)?;
        let mut out = vec![T::zero(); self.state_dim()];
        self.drift.drift_pair(theta, x, y, &mut out);
        Ok(out)
    }

    /// `B(theta, x^i, mu^N)` for particle `i` of the ensemble.
    pub fn eval_drift_mean(&self, theta: &[T], i: usize, ensemble: &ParticleEnsemble<T>) -> Result<Vec<T>> {
        self.check_theta(theta)?;
        self.check_ensemble(ensemble)?;
        if i >= ensemble.n_particles() {
            return Err(Error::InvalidInput(format!("particle {i} out of range")));
        }
        let mut out = vec![T::zero(); self.state_dim()];
        self.drift.drift_mean(theta, ensemble.particle(i), ensemble, &mut out);
        Ok(out)
    }

    /// `g(theta, x, y)` as a `p x d` row-major matrix.
    pub fn eval_grad_pair(&self, theta: &[T], x: &[T], y: &[T]) -> Result<Vec<T>> {
        self.check_theta(theta)?;
        self.check_state(x)?;
        self.check_state(y)?;
        let mut out = vec![T::zero(); self.param_dim() * self.state_dim()];
        self.drift.grad_pair(theta, x, y, &mut out);
        Ok(out)
    }

    /// `G(theta, x^i, mu^N)` as a `p x d` row-major matrix.
    pub fn eval_grad_mean(&self, theta: &[T], i: usize, ensemble: &ParticleEnsemble<T>) -> Result<Vec<T>> {
        self.check_theta(theta)?;
        self.check_ensemble(ensemble)?;
        if i >= ensemble.n_particles() {
            return Err(Error::InvalidInput(format!("particle {i} out of range")));
        }
        let mut out = vec![T::zero(); self.param_dim() * self.state_dim()];
        self.drift.grad_mean(theta, ensemble.particle(i), ensemble, &mut out);
        Ok(out)
    }

    /// Diffusion matrix of particle `i` and, for parameterized diffusions,
    /// `d(Sigma Sigma^T)/d eta` as an `m x d x d` tensor.
    pub fn eval_diffusion(
        &self,
        eta: Option<&[T]>,
        i: usize,
        ensemble: &ParticleEnsemble<T>,
    ) -> Result<(Vec<T>, Option<Vec<T>>)> {
        self.check_ensemble(ensemble)?;
        if i >= ensemble.n_particles() {
            return Err(Error::InvalidInput(format!("particle {i} out of range")));
        }
        match &self.diffusion {
            Diffusion::Constant(m) => Ok((m.clone(), None)),
            Diffusion::Field(field) => {
                let eta = eta.ok_or_else(|| Error::InvalidInput("diffusion parameters required".into()))?;
                if eta.len() != field.param_dim() {
                    return Err(Error::InvalidInput("diffusion parameter dimension mismatch".into()));
                }
                let (sigma, grad) = field_mean(field.as_ref(), eta, ensemble.particle(i), ensemble);
                Ok((sigma.clone(), Some(sigma_sq_grad(&sigma, &grad, self.state_dim()))))
            }
        }
    }

    /// `<u, v>_W` with the model's weighting.
    pub fn weighted_dot(&self, u: &[T], v: &[T]) -> T {
        match &self.weight_matrix {
            None => crate::scalar::dot(u, v),
            Some(w) => {
                let d = u.len();
                let mut acc = T::zero();
                for r in 0..d {
                    let mut row = T::zero();
                    for c in 0..d {
                        row += w[r * d + c] * v[c];
                    }
                    acc += u[r] * row;
                }
                acc
            }
        }
    }

    /// `W r` with the model's weighting.
    pub fn apply_weight(&self, r: &[T], out: &mut [T]) {
        match &self.weight_matrix {
            None => out.copy_from_slice(r),
            Some(w) => {
                let d = r.len();
                for (row, o) in out.iter_mut().enumerate() {
                    let mut acc = T::zero();
                    for c in 0..d {
                        acc += w[row * d + c] * r[c];
                    }
                    *o = acc;
                }
            }
        }
    }
}

/// Mean-field diffusion `Sigma` and its eta-gradient at state `x`.
pub(crate) fn field_mean<T: Scalar>(
    field: &dyn DiffusionField<T>,
    eta: &[T],
    x: &[T],
    ensemble: &ParticleEnsemble<T>,
) -> (Vec<T>, Vec<T>) {
    let d = field.state_dim();
    let m = field.param_dim();
    let mut sigma = vec![T::zero(); d * d];
    let mut grad = vec![T::zero(); m * d * d];
    let mut s_tmp = vec![T::zero(); d * d];
    let mut g_tmp = vec![T::zero(); m * d * d];
    for y in ensemble.rows() {
        field.sigma_pair(eta, x, y, &mut s_tmp);
        field.sigma_pair_grad(eta, x, y, &mut g_tmp);
        sigma.iter_mut().zip(&s_tmp).for_each(|(a, b)| *a += *b);
        grad.iter_mut().zip(&g_tmp).for_each(|(a, b)| *a += *b);
    }
    let n = T::from_usize_lossy(ensemble.n_particles());
    sigma.iter_mut().for_each(|v| *v /= n);
    grad.iter_mut().for_each(|v| *v /= n);
    (sigma, grad)
}

/// `Sigma Sigma^T`, `d x d`.
pub fn sigma_sq<T: Scalar>(sigma: &[T], d: usize) -> Vec<T> {
    let mut out = vec![T::zero(); d * d];
    for r in 0..d {
        for c in 0..d {
            let mut acc = T::zero();
            for k in 0..d {
                acc += sigma[r * d + k] * sigma[c * d + k];
            }
            out[r * d + c] = acc;
        }
    }
    out
}

/// `d(Sigma Sigma^T)/d eta_a = dSigma_a Sigma^T + Sigma dSigma_a^T` for each `a`.
pub fn sigma_sq_grad<T: Scalar>(sigma: &[T], grad: &[T], d: usize) -> Vec<T> {
    let m = grad.len() / (d * d);
    let mut out = vec![T::zero(); m * d * d];
    for a in 0..m {
        let ds = &grad[a * d * d..(a + 1) * d * d];
        for r in 0..d {
            for c in 0..d {
                let mut acc = T::zero();
                for k in 0..d {
                    acc += ds[r * d + k] * sigma[c * d + k] + sigma[r * d + k] * ds[c * d + k];
                }
                out[a * d * d + r * d + c] = acc;
            }
        }
    }
    out
}

/// Inverse of the masked block of `sigma sigma^T`, embedded in a `d x d` zero matrix.
fn masked_inverse_covariance<T: Scalar>(sigma: &[T], mask: &[bool]) -> Result<Vec<T>> {
    let d = mask.len();
    let cov = sigma_sq(sigma, d);
    let idx: Vec<usize> = (0..d).filter(|&c| mask[c]).collect();
    let k = idx.len();
    if k == 0 {
        return Err(Error::InvalidConfig("noise mask is empty; inverse-diffusion weighting undefined".into()));
    }
    let mut block = vec![T::zero(); k * k];
    for (a, &r) in idx.iter().enumerate() {
        for (b, &c) in idx.iter().enumerate() {
            block[a * k + b] = cov[r * d + c];
        }
    }
    let inv = invert(&block, k).ok_or_else(|| {
        Error::InvalidConfig("masked diffusion block is singular; use identity weighting".into())
    })?;
    let mut out = vec![T::zero(); d * d];
    for (a, &r) in idx.iter().enumerate() {
        for (b, &c) in idx.iter().enumerate() {
            out[r * d + c] = inv[a * k + b];
        }
    }
    Ok(out)
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
fn invert<T: Scalar>(m: &[T], k: usize) -> Option<Vec<T>> {
    let mut a = m.to_vec();
    let mut inv = vec![T::zero(); k * k];
    for i in 0..k {
        inv[i * k + i] = T::one();
    }
    let scale = m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let tol = scale * T::epsilon() * T::from_usize_lossy(k.max(1)) * T::lit(16.0);
    for col in 0..k {
        let pivot = (col..k).max_by(|&r1, &r2| {
            a[r1 * k + col].abs().partial_cmp(&a[r2 * k + col].abs()).unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot * k + col].abs() <= tol {
            return None;
        }
        if pivot != col {
            for c in 0..k {
                a.swap(pivot * k + c, col * k + c);
                inv.swap(pivot * k + c, col * k + c);
            }
        }
        let p = a[col * k + col];
        for c in 0..k {
            a[col * k + c] /= p;
            inv[col * k + c] /= p;
        }
        for r in 0..k {
            if r != col {
                let f = a[r * k + col];
                if f != T::zero() {
                    for c in 0..k {
                        a[r * k + c] = a[r * k + c] - f * a[col * k + c];
                        inv[r * k + c] = inv[r * k + c] - f * inv[col * k + c];
                    }
                }
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_two_by_two() {
        let inv = invert::<f64>(&[4.0, 1.0, 2.0, 3.0], 2).unwrap();
        let expect = [0.3, -0.1, -0.2, 0.4];
        for (a, b) in inv.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(invert(&[1.0, 2.0, 2.0, 4.0], 2).is_none());
    }

    #[test]
    fn masked_inverse_only_touches_noisy_block() {
        let sigma = Diffusion::<f64>::isotropic(2.0, &[false, true]);
        let Diffusion::Constant(s) = sigma else { unreachable!() };
        let w = masked_inverse_covariance(&s, &[false, true]).unwrap();
        assert_eq!(w, vec![0.0, 0.0, 0.0, 0.25]);
    }

    #[test]
    fn box_membership() {
        let b = ParamBox::new(vec![0.0, 0.0], vec![f64::INFINITY, f64::INFINITY]).unwrap();
        assert!(b.contains(&[0.0, 3.0]));
        assert!(!b.contains(&[-0.1, 0.5]));
        assert!(ParamBox::<f64>::unbounded(2).contains(&[-1e300, 1e300]));
        assert!(ParamBox::new(vec![1.0], vec![0.0]).is_err());
    }
}
