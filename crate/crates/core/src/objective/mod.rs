//! Contrast functions, their parameter gradients, and time-averaged surfaces.
//!
//! All quantities are evaluated against the empirical measure of an ensemble;
//! `theta0` is the data-generating parameter.

mod surface;

pub use surface::{surface_scan, GridScan, ScanKind, ScanMode, SurfaceAccumulator, SurfaceSpec};

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::scalar::Scalar;
use crate::sde::ParticleEnsemble;

fn drift_mean<T: Scalar>(model: &ModelSpec<T>, theta: &[T], x: &[T], ens: &ParticleEnsemble<T>) -> Vec<T> {
    let mut out = vec![T::zero(); model.state_dim()];
    model.pair_model().drift_mean(theta, x, ens, &mut out);
    out
}

fn drift_pair<T: Scalar>(model: &ModelSpec<T>, theta: &[T], x: &[T], y: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); model.state_dim()];
    model.pair_model().drift_pair(theta, x, y, &mut out);
    out
}

fn check<T: Scalar>(model: &ModelSpec<T>, theta: &[T], theta0: &[T], states: &[&[T]]) -> Result<()> {
    let p = model.param_dim();
    if theta.len() != p || theta0.len() != p {
        return Err(Error::InvalidInput(format!("{} expects {p} parameters", model.id())));
    }
    if states.iter().any(|s| s.len() != model.state_dim()) {
        return Err(Error::InvalidInput("state dimension does not match model".into()));
    }
    Ok(())
}

fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| *x - *y).collect()
}

/// `G W r` for a `p x d` gradient.
fn grad_times_weighted<T: Scalar>(model: &ModelSpec<T>, grad: &[T], r: &[T]) -> Vec<T> {
    let d = r.len();
    let mut wr = vec![T::zero(); d];
    model.apply_weight(r, &mut wr);
    (0..model.param_dim()).map(|a| crate::scalar::dot(&grad[a * d..(a + 1) * d], &wr)).collect()
}

/// `L(theta, x, mu^N) = 1/2 |B(theta, x, mu^N) - B(theta0, x, mu^N)|_W^2`.
pub fn contrast_l<T: Scalar>(model: &ModelSpec<T>, theta: &[T], theta0: &[T], x: &[T], ens: &ParticleEnsemble<T>) -> Result<T> {
    check(model, theta, theta0, &[x])?;
    let r = sub(&drift_mean(model, theta, x, ens), &drift_mean(model, theta0, x, ens));
    Ok(T::lit(0.5) * model.weighted_dot(&r, &r))
}

/// Polarized contrast
/// `l = 1/2 <b(theta, x, y) - B(theta0, x, mu^N), b(theta, x, z) - B(theta0, x, mu^N)>_W`.
///
/// Averaging over all ordered pairs `(y, z)` of the ensemble recovers `L`.
pub fn contrast_ell<T: Scalar>(
    model: &ModelSpec<T>,
    theta: &[T],
    theta0: &[T],
    x: &[T],
    y: &[T],
    z: &[T],
    ens: &ParticleEnsemble<T>,
) -> Result<T> {
    check(model, theta, theta0, &[x, y, z])?;
    let b0 = drift_mean(model, theta0, x, ens);
    let ry = sub(&drift_pair(model, theta, x, y), &b0);
    let rz = sub(&drift_pair(model, theta, x, z), &b0);
    Ok(T::lit(0.5) * model.weighted_dot(&ry, &rz))
}

/// `H = G(theta, x, mu^N) W (B(theta, x, mu^N) - B(theta0, x, mu^N))`, the gradient of `L`.
pub fn grad_h_mean<T: Scalar>(
    model: &ModelSpec<T>,
    theta: &[T],
    theta0: &[T],
    x: &[T],
    ens: &ParticleEnsemble<T>,
) -> Result<Vec<T>> {
    check(model, theta, theta0, &[x])?;
    let r = sub(&drift_mean(model, theta, x, ens), &drift_mean(model, theta0, x, ens));
    let mut g = vec![T::zero(); model.param_dim() * model.state_dim()];
    model.pair_model().grad_mean(theta, x, ens, &mut g);
    Ok(grad_times_weighted(model, &g, &r))
}

/// `h = g(theta, x, y) W (b(theta, x, z) - B(theta0, x, mu^N))`.
pub fn grad_h<T: Scalar>(
    model: &ModelSpec<T>,
    theta: &[T],
    theta0: &[T],
    x: &[T],
    y: &[T],
    z: &[T],
    ens: &ParticleEnsemble<T>,
) -> Result<Vec<T>> {
    check(model, theta, theta0, &[x, y, z])?;
    let r = sub(&drift_pair(model, theta, x, z), &drift_mean(model, theta0, x, ens));
    let mut g = vec![T::zero(); model.param_dim() * model.state_dim()];
    model.pair_model().grad_pair(theta, x, y, &mut g);
    Ok(grad_times_weighted(model, &g, &r))
}

/// `(h(y, z) + h(z, y)) / 2`, the exact gradient of `contrast_ell`.
pub fn grad_h_sym<T: Scalar>(
    model: &ModelSpec<T>,
    theta: &[T],
    theta0: &[T],
    x: &[T],
    y: &[T],
    z: &[T],
    ens: &ParticleEnsemble<T>,
) -> Result<Vec<T>> {
    let a = grad_h(model, theta, theta0, x, y, z, ens)?;
    let b = grad_h(model, theta, theta0, x, z, y, ens)?;
    Ok(a.iter().zip(&b).map(|(u, v)| T::lit(0.5) * (*u + *v)).collect())
}

/// Large-N, long-time limit of the time-averaged `L` for the linear model
/// `b = -theta1 x - theta2 (x - y)`:
/// `ds^2 v0 / (2 sigma^2)` with `ds = (theta1 + theta2) - (theta01 + theta02)`
/// and `v0 = sigma^2 / (2 (theta01 + theta02))` the stationary variance.
pub fn linear_model_analytic_objective<T: Scalar>(theta: &[T], theta0: &[T], sigma: T) -> Result<T> {
    if theta.len() != 2 || theta0.len() != 2 {
        return Err(Error::InvalidInput("linear model has two parameters".into()));
    }
    let s0 = theta0[0] + theta0[1];
    if !(s0 > T::zero()) {
        return Err(Error::InvalidInput("theta01 + theta02 must be positive for a stationary law".into()));
    }
    if !(sigma > T::zero()) {
        return Err(Error::InvalidInput("sigma must be positive".into()));
    }
    let ds = theta[0] + theta[1] - s0;
    let v0 = sigma * sigma / (T::lit(2.0) * s0);
    Ok(ds * ds * v0 / (T::lit(2.0) * sigma * sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_model;

    #[test]
    fn analytic_oracle_values() {
        let v: f64 = linear_model_analytic_objective(&[1.5, 0.7], &[1.0, 0.2], 1.0).unwrap();
        assert!((v - 0.5 / 2.4).abs() < 1e-15);
        assert_eq!(linear_model_analytic_objective(&[1.0, 0.2], &[1.0, 0.2], 1.0).unwrap(), 0.0);
        assert!(linear_model_analytic_objective::<f64>(&[1.2, 0.0], &[1.0, 0.2], 1.0).unwrap().abs() < 1e-15);
        assert!(linear_model_analytic_objective(&[1.0, 0.0], &[-1.0, 0.2], 1.0).is_err());
    }

    #[test]
    fn linear_contrast_hand_value() {
        let model = build_model::<f64>("linear", 1.0).unwrap();
        let ens = ParticleEnsemble::from_rows(0.0, &[vec![1.0], vec![-1.0]]).unwrap();
        let l = contrast_l(&model, &[1.5, 0.7], &[1.0, 0.2], &[1.0], &ens).unwrap();
        // x = 1 and mean 0: r = -(2.2 - 1.2)
        assert!((l - 0.5).abs() < 1e-15);
        assert_eq!(contrast_l(&model, &[1.0, 0.2], &[1.0, 0.2], &[1.0], &ens).unwrap(), 0.0);
        assert!(grad_h_mean(&model, &[1.0, 0.2], &[1.0, 0.2], &[1.0], &ens).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn ell_with_equal_arguments_is_a_square() {
        let model = build_model::<f64>("linear", 1.0).unwrap();
        let ens = ParticleEnsemble::from_rows(0.0, &[vec![0.3], vec![-1.2], vec![0.8]]).unwrap();
        let x = ens.particle(0);
        let y = ens.particle(1);
        let v = contrast_ell(&model, &[1.0, 0.2], &[1.0, 0.2], x, y, y, &ens).unwrap();
        assert!(v > 0.0);
    }
}
