mod common;

use common::{all_models, random_ensemble, random_theta, rng};
use ipsgd::objective::{contrast_ell, contrast_l, grad_h_mean, grad_h_sym, linear_model_analytic_objective};
use proptest::prelude::*;

#[test]
fn analytic_objective_vanishes_on_the_ridge() {
    for s in [-0.5, 0.0, 0.3, 1.1] {
        let v: f64 = linear_model_analytic_objective(&[1.0 + s, 0.2 - s], &[1.0, 0.2], 1.0).unwrap();
        assert!(v.abs() < 1e-15);
    }
    // ds = 1: ds^2 v0 / (2 sigma^2) with v0 = 1 / 2.4
    let v: f64 = linear_model_analytic_objective(&[2.0, 0.2], &[1.0, 0.2], 1.0).unwrap();
    assert!((v - 0.5 / 2.4).abs() < 1e-15);
}

#[test]
fn analytic_objective_rejects_unstable_truth() {
    assert!(linear_model_analytic_objective(&[1.0, 0.0], &[-1.0, 0.5], 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn contrast_is_mean_of_polarized_contrasts(seed in any::<u64>(), model_ix in 0usize..6) {
        let model = &all_models()[model_ix];
        let mut r = rng(seed);
        let n = 7;
        let theta = random_theta(&mut r, model.param_dim());
        let theta0 = random_theta(&mut r, model.param_dim());
        let ens = random_ensemble(&mut r, n, model.state_dim());
        let x = ens.particle(0);
        let l = contrast_l(model, &theta, &theta0, x, &ens).unwrap();
        let h = grad_h_mean(model, &theta, &theta0, x, &ens).unwrap();
        let mut l_sum = 0.0;
        let mut h_sum = vec![0.0; model.param_dim()];
        for j in 0..n {
            for k in 0..n {
                let (y, z) = (ens.particle(j), ens.particle(k));
                l_sum += contrast_ell(model, &theta, &theta0, x, y, z, &ens).unwrap();
                for (acc, v) in h_sum.iter_mut().zip(grad_h_sym(model, &theta, &theta0, x, y, z, &ens).unwrap()) {
                    *acc += v;
                }
            }
        }
        let nn = (n * n) as f64;
        prop_assert!((l - l_sum / nn).abs() <= 1e-12 * (1.0 + l.abs()));
        for (a, b) in h.iter().zip(&h_sum) {
            prop_assert!((a - b / nn).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn contrast_is_nonnegative_and_zero_at_truth(seed in any::<u64>(), model_ix in 0usize..6) {
        let model = &all_models()[model_ix];
        let mut r = rng(seed);
        let theta = random_theta(&mut r, model.param_dim());
        let theta0 = random_theta(&mut r, model.param_dim());
        let ens = random_ensemble(&mut r, 5, model.state_dim());
        let x = ens.particle(2);
        prop_assert!(contrast_l(model, &theta, &theta0, x, &ens).unwrap() >= 0.0);
        prop_assert_eq!(contrast_l(model, &theta0, &theta0, x, &ens).unwrap(), 0.0);
    }
}
