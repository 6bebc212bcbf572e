mod common;

use common::{all_models, random_ensemble, random_theta, rng};
use ipsgd::models::{build_model, Weighting};
use ipsgd::Ensemble;
use proptest::prelude::*;

fn fd_grad(model: &ipsgd::Model, theta: &[f64], x: &[f64], y: &[f64]) -> Vec<f64> {
    let (p, d) = (model.param_dim(), model.state_dim());
    let h = 1e-6;
    let mut out = vec![0.0; p * d];
    for a in 0..p {
        let mut up = theta.to_vec();
        let mut dn = theta.to_vec();
        up[a] += h;
        dn[a] -= h;
        let bu = model.eval_drift_pair(&up, x, y).unwrap();
        let bd = model.eval_drift_pair(&dn, x, y).unwrap();
        for c in 0..d {
            out[a * d + c] = (bu[c] - bd[c]) / (2.0 * h);
        }
    }
    out
}

#[test]
fn pair_gradients_match_finite_differences() {
    let mut r = rng(11);
    for model in all_models() {
        for _ in 0..50 {
            let theta = random_theta(&mut r, model.param_dim());
            let ens = random_ensemble(&mut r, 2, model.state_dim());
            let (x, y) = (ens.particle(0), ens.particle(1));
            let g = model.eval_grad_pair(&theta, x, y).unwrap();
            let fd = fd_grad(&model, &theta, x, y);
            let err: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let gn: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(err <= 1e-6 * (1.0 + gn), "{}: {err}", model.id());
        }
    }
}

#[test]
fn vol32_diffusion_value() {
    let model = build_model::<f64>("vol32", 1.0).unwrap();
    let ens = Ensemble::new(0.0, 1, 1, vec![-2.0]).unwrap();
    let (sigma, grad) = model.eval_diffusion(Some(&[0.7]), 0, &ens).unwrap();
    assert!((sigma[0] - 1.979_898_987_3).abs() < 1e-9);
    // d(eta^2 |x|^3)/d eta = 2 eta |x|^3
    assert!((grad.unwrap()[0] - 2.0 * 0.7 * 8.0).abs() < 1e-12);
}

#[test]
fn degenerate_models_use_identity_weighting() {
    for id in ["fitzhugh-nagumo", "cucker-smale", "vol32"] {
        let m = build_model::<f64>(id, 1.0).unwrap();
        assert_eq!(m.weighting(), Weighting::Identity, "{id}");
        assert!(m.weight_matrix().is_none());
    }
    let lin = build_model::<f64>("linear", 2.0).unwrap();
    assert!((lin.weight_matrix().unwrap()[0] - 0.25).abs() < 1e-15);
}

#[test]
fn unknown_model_is_rejected() {
    assert!(build_model::<f64>("lorenz", 1.0).is_err());
}

#[test]
fn single_precision_instantiation() {
    let m = build_model::<f32>("double-well", 1.0).unwrap();
    let b = m.eval_drift_pair(&[1.0, 2.0, 2.0], &[1.0], &[0.0]).unwrap();
    // -(1 - 2) - 2 (1 - 0) = -1
    assert!((b[0] + 1.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_drift_is_permutation_invariant(seed in any::<u64>(), model_ix in 0usize..6, n in 2usize..8) {
        let model = &all_models()[model_ix];
        let mut r = rng(seed);
        let theta = random_theta(&mut r, model.param_dim());
        let d = model.state_dim();
        let ens = random_ensemble(&mut r, n, d);
        let mut rows: Vec<Vec<f64>> = (0..n).map(|i| ens.particle(i).to_vec()).collect();
        rows[1..].reverse();
        rows[1..].rotate_left(1);
        let perm = Ensemble::from_rows(0.0, &rows).unwrap();
        let a = model.eval_drift_mean(&theta, 0, &ens).unwrap();
        let b = model.eval_drift_mean(&theta, 0, &perm).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn kuramoto_is_antisymmetric(theta in -5.0f64..5.0, x in -10.0f64..10.0, y in -10.0f64..10.0) {
        let m = build_model::<f64>("kuramoto", 1.0).unwrap();
        let a = m.eval_drift_pair(&[theta], &[x], &[y]).unwrap()[0];
        let b = m.eval_drift_pair(&[theta], &[y], &[x]).unwrap()[0];
        prop_assert_eq!(a, -b);
    }

    #[test]
    fn mean_drift_averages_pairs(seed in any::<u64>(), model_ix in 0usize..6, n in 1usize..6) {
        let model = &all_models()[model_ix];
        let mut r = rng(seed);
        let theta = random_theta(&mut r, model.param_dim());
        let ens = random_ensemble(&mut r, n, model.state_dim());
        let mean = model.eval_drift_mean(&theta, 0, &ens).unwrap();
        for c in 0..model.state_dim() {
            let direct: f64 = (0..n)
                .map(|j| model.eval_drift_pair(&theta, ens.particle(0), ens.particle(j)).unwrap()[c])
                .sum::<f64>() / n as f64;
            prop_assert!((mean[c] - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }
}
