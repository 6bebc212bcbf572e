use std::sync::Arc;

use super::{Diffusion, DiffusionField, ModelSpec, PairModel, ParamBox, Weighting};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sde::ParticleEnsemble;

pub const MODEL_IDS: [&str; 6] = ["linear", "double-well", "fitzhugh-nagumo", "kuramoto", "cucker-smale", "vol32"];

// Models whose pairwise drift is affine in `y` satisfy
// (1/N) sum_j b(theta, x, x^j) = b(theta, x, mean(x)), so B and G cost O(N).
macro_rules! affine_in_y_means {
    () => {
        fn drift_mean(&self, theta: &[T], x: &[T], ensemble: &ParticleEnsemble<T>, out: &mut [T]) {
            let m = ensemble.mean();
            self.drift_pair(theta, x, &m, out);
        }

        fn grad_mean(&self, theta: &[T], x: &[T], ensemble: &ParticleEnsemble<T>, out: &mut [T]) {
            let m = ensemble.mean();
            self.grad_pair(theta, x, &m, out);
        }

        fn drift_all(&self, theta: &[T], ensemble: &ParticleEnsemble<T>, out: &mut [T]) {
            let m = ensemble.mean();
            let d = ensemble.state_dim();
            for (i, chunk) in out.chunks_exact_mut(d).enumerate() {
                self.drift_pair(theta, ensemble.particle(i), &m, chunk);
            }
        }
    };
}

/// Quadratic confinement and quadratic interaction:
/// `b = -theta1 x - theta2 (x - y)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Linear;

impl<T: Scalar> PairModel<T> for Linear {
    fn id(&self) -> &'static str {
        "linear"
    }
    fn param_dim(&self) -> usize {
        2
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn drift_pair(&self, theta: &[T], x: &[T], y: &[T], out: &mut [T]) {
        out[0] = -theta[0] * x[0] - theta[1] * (x[0] - y[0]);
    }
    fn grad_pair(&self, _theta: &[T], x: &[T], y: &[T], out: &mut [T]) {
        out[0] = -x[0];
        out[1] = -(x[0] - y[0]);
    }
    affine_in_y_means!();
}

/// Double-well confinement with Curie-Weiss interaction:
/// `b = -(theta1 x^3 - theta2 x) - theta3 (x - y)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleWell;

impl<T: Scalar> PairModel<T> for DoubleWell {
    fn id(&self) -> &'static str {
        "double-well"
    }
    fn param_dim(&self) -> usize {
        3
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn drift_pair(&self, theta: &[T], x: &[T], y: &[T], out: &mut [T]) {
        let x0 = x[0];
        out[0] = -(theta[0] * x0 * x0 * x0 - theta[1] * x0) - theta[2] * (x0 - y[0]);
    }
    fn grad_pair(&self, _theta: &[T], x: &[T], y: &[T], out: &mut [T]) {
        let x0 = x[0];
        out[0] = -(x0 * x0 * x0);
        out[1] = x0;
        out[2] = -(x0 - y[0]);
    }
    affine_in_y_means!();
}

/// Stochastic FitzHugh-Nagumo neurons, state `(voltage, recovery)`:
///
/// ```text
/// b_1 = theta1 (v - v^3/3 - w) - theta2 (v - v')
/// b_2 = v + theta3 - theta4 w
/// ```
///
/// Noise acts on the voltage only.
#[derive(Debug, Clone, Copy, Default)]
pub struct FitzHughNagumo;

impl<T: Scalar> PairModel<T> for FitzHughNagumo {
    fn id(&self) -> &'static str {
        "fitzhugh-nagumo"
    }
    fn param_dim(&self) -> usize {
        4
    }
    fn state_dim(&self) -> usize {
        2
    }
    fn noise_mask(&self) -> Vec<bool> {
        vec![true, false]
    }
    fn default_weighting(&self) -> Weighting {
        Weighting::Identity
    }
    fn drift_pair(&self, theta: &[T], x: &[T], y: &[T], out: &mut [T]) {
        let (v, w) = (x[0], x[1]);
        let third = T::lit(1.0 / 3.0);
        out[0] = theta[0] * (v - third * v * v * v - w) - theta[1] * (v - y[0]);
        out[1] = v + theta[2] - theta[3] * w;
    }
    fn grad_pair(&self, _theta: &[T], x: &[T], y: &[T], out: &mut [T]) {
        let (v, w) = (x[0], x[1]);
        let third = T::lit(1.0 / 3.0);
        let zero = T::zero();
        // rows: theta1..theta4, columns: (voltage, recovery)
        out[0] = v - third * v * v * v - w;
        out[1] = zero;
        out[2] = -(v - y[0]);
        out[3] = zero;
        out[4] = zero;
        out[5] = T::one();
        out[6] = zero;
        out[7] = -w;
    }
    affine_in_y_means!();
}

/// Noisy Kuramoto oscillators: `b = -theta sin(x - y)`.
///
/// Phases are integrated on the real line without wrapping.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kuramoto;

impl<T: Scalar> PairModel<T> for Kuramoto {
    fn id(&self) -> &'static str {
        "kuramoto"
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn drift_pair(&self, theta: &[T], x: &[T], y: &[T], out: &mut [T]) {
        out[0] = -theta[0] * (x[0] - y[0]).sin();
    }
    fn grad_pair(&self, _theta: &[T], x: &[T], y: &[T], out: &mut [T]) {
        out[0] = -(x[0] - y[0]).sin();
    }
}

/// Stochastic Cucker-Smale flocking, state `(position, velocity)`:
///
/// ```text
/// b_pos = v
/// b_vel = -theta1 x - theta2 psi(theta3, |x - x'|^2) (v - v'),   psi(c, u) = (1 + u)^(-c)
/// ```
///
/// Noise acts on the velocity only.
#[derive(Debug, Clone, Copy, Default)]
pub struct CuckerSmale;

impl<T: Scalar> PairModel<T> for CuckerSmale {
    fn id(&self) -> &'static str {
        "cucker-smale"
    }
    fn param_dim(&self) -> usize {
        3
    }
    fn state_dim(&self) -> usize {
        2
    }
    fn noise_mask(&self) -> Vec<bool> {
        vec![false, true]
    }
    fn default_weighting(&self) -> Weighting {
        Weighting::Identity
    }
    fn drift_pair(&self, theta: &[T], x: &[T], y: &[T], out: &mut [T]) {
        let dpos = x[0] - y[0];
        let psi = (T::one() + dpos * dpos).powf(-theta[2]);
        out[0] = x[1];
        out[1] = -theta[0] * x[0] - theta[1] * psi * (x[1] - y[1]);
    }
    fn grad_pair(&self, theta: &[T], x: &[T], y: &[T], out: &mut [T]) {
        let dpos = x[0] - y[0];
        let base = T::one() + dpos * dpos;
        let psi = base.powf(-theta[2]);
        let dv = x[1] - y[1];
        let zero = T::zero();
        out[0] = zero;
        out[1] = -x[0];
        out[2] = zero;
        out[3] = -psi * dv;
        out[4] = zero;
        // d psi / d theta3 = -ln(1 + u) psi
        out[5] = theta[1] * base.ln() * psi * dv;
    }
}

/// Mean-field 3/2 stochastic volatility drift:
/// `b = -x (theta1 |x| - theta2) - theta3 (x - y)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Vol32Drift;

impl<T: Scalar> PairModel<T> for Vol32Drift {
    fn id(&self) -> &'static str {
        "vol32"
    }
    fn param_dim(&self) -> usize {
        3
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn default_weighting(&self) -> Weighting {
        Weighting::Identity
    }
    fn drift_pair(&self, theta: &[T], x: &[T], y: &[T], out: &mut [T]) {
        let x0 = x[0];
        out[0] = -x0 * (theta[0] * x0.abs() - theta[1]) - theta[2] * (x0 - y[0]);
    }
    fn grad_pair(&self, _theta: &[T], x: &[T], y: &[T], out: &mut [T]) {
        let x0 = x[0];
        out[0] = -x0 * x0.abs();
        out[1] = x0;
        out[2] = -(x0 - y[0]);
    }
    affine_in_y_means!();
}

/// Diffusion `sigma(eta, x, y) = eta1 |x|^(3/2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Vol32Diffusion;

impl<T: Scalar> DiffusionField<T> for Vol32Diffusion {
    fn param_dim(&self) -> usize {
        1
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn sigma_pair(&self, eta: &[T], x: &[T], _y: &[T], out: &mut [T]) {
        out[0] = eta[0] * x[0].abs().powf(T::lit(1.5));
    }
    fn sigma_pair_grad(&self, _eta: &[T], x: &[T], _y: &[T], out: &mut [T]) {
        out[0] = x[0].abs().powf(T::lit(1.5));
    }
}

/// Static description of a zoo entry, printed by `--list-models`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ModelInfo {
    pub id: &'static str,
    pub param_dim: usize,
    pub state_dim: usize,
    pub params: Vec<String>,
    pub diffusion_params: Vec<String>,
    pub noise_mask: Vec<bool>,
    pub weighting: Weighting,
    pub drift: &'static str,
}

fn pair_model<T: Scalar>(id: &str) -> Result<Arc<dyn PairModel<T>>> {
    Ok(match id {
        "linear" => Arc::new(Linear),
        "double-well" => Arc::new(DoubleWell),
        "fitzhugh-nagumo" => Arc::new(FitzHughNagumo),
        "kuramoto" => Arc::new(Kuramoto),
        "cucker-smale" => Arc::new(CuckerSmale),
        "vol32" => Arc::new(Vol32Drift),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown model `{other}`; known models: {}",
                MODEL_IDS.join(", ")
            )))
        }
    })
}

/// Build a zoo model with its default weighting and an unbounded admissible set.
///
/// `sigma` is the constant noise level on the masked components; it is
/// ignored by `vol32`, whose diffusion is parameterized by `eta`.
pub fn build_model<T: Scalar>(id: &str, sigma: T) -> Result<ModelSpec<T>> {
    build_model_with_weighting(id, sigma, None)
}

/// As [`build_model`], optionally overriding the model's default weighting.
pub fn build_model_with_weighting<T: Scalar>(id: &str, sigma: T, weighting: Option<Weighting>) -> Result<ModelSpec<T>> {
    let drift = pair_model::<T>(id)?;
    let p = drift.param_dim();
    let weighting = weighting.unwrap_or_else(|| drift.default_weighting());
    let diffusion = if id == "vol32" {
        Diffusion::Field(Arc::new(Vol32Diffusion))
    } else {
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("sigma must be finite and non-negative, got {sigma}")));
        }
        Diffusion::isotropic(sigma, &drift.noise_mask())
    };
    ModelSpec::new(drift, diffusion, weighting, ParamBox::unbounded(p))
}

pub fn model_catalog() -> Vec<ModelInfo> {
    MODEL_IDS
        .iter()
        .map(|id| {
            let m = pair_model::<f64>(id).expect("zoo ids are valid");
            let diffusion_params = if *id == "vol32" { vec!["eta1".to_string()] } else { Vec::new() };
            ModelInfo {
                id: m.id(),
                param_dim: m.param_dim(),
                state_dim: m.state_dim(),
                params: m.param_names(),
                diffusion_params,
                noise_mask: m.noise_mask(),
                weighting: m.default_weighting(),
                drift: match *id {
                    "linear" => "-theta1 x - theta2 (x - y)",
                    "double-well" => "-(theta1 x^3 - theta2 x) - theta3 (x - y)",
                    "fitzhugh-nagumo" => "(theta1 (v - v^3/3 - w) - theta2 (v - v'), v + theta3 - theta4 w)",
                    "kuramoto" => "-theta1 sin(x - y)",
                    "cucker-smale" => "(v, -theta1 x - theta2 (1 + |x - x'|^2)^(-theta3) (v - v'))",
                    _ => "-x (theta1 |x| - theta2) - theta3 (x - y), diffusion eta1 |x|^(3/2)",
                },
            }
        })
        .collect()
}
