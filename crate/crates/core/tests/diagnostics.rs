mod common;

use ipsgd::diagnostics::stats::{mean, moments, sample_variance};
use ipsgd::diagnostics::{
    clt_rescaled_moments, coupling_distance, l2_error_sweep, poc_rate, rate_function_a, rho_rate, CltSpec,
    MomentTracker,
};
use ipsgd::experiments::load_config;
use ipsgd::models::{build_model, TruthSchedule};
use ipsgd::sde::{initial_ensemble, run_trajectory, ParticleNoise, SimulationSpec};
use proptest::prelude::*;

fn linear_sim(n_steps: u64) -> SimulationSpec<f64> {
    SimulationSpec {
        model: build_model("linear", 1.0).unwrap(),
        truth: TruthSchedule::constant(vec![1.0, 0.2]),
        eta_true: None,
        dt: 0.1,
        n_steps,
    }
}

#[test]
fn rate_functions_hand_values() {
    assert!((rho_rate(16, 1).unwrap() - 0.5).abs() < 1e-15);
    assert!((rho_rate(32, 5).unwrap() - 0.5).abs() < 1e-15);
    assert!((poc_rate(16, 1.0).unwrap() - 0.5).abs() < 1e-15);
    assert!((rate_function_a(0.0, 2.0, 1.0, 1.0, 1.0).unwrap() - 4.0).abs() < 1e-12);
    assert!(rho_rate(0, 1).is_err());
}

#[test]
fn coupling_distance_starts_at_zero_and_is_deterministic() {
    let sim = linear_sim(100);
    let a = coupling_distance(&sim, 5, 40, 3).unwrap();
    assert_eq!(a.len(), 101);
    assert_eq!(a[0], 0.0);
    assert!(a[100] > 0.0);
    assert_eq!(a, coupling_distance(&sim, 5, 40, 3).unwrap());
    assert!(coupling_distance(&sim, 40, 5, 3).is_err());
}

#[test]
fn moment_tracker_on_stationary_run() {
    let sim = linear_sim(2000);
    let mut noise = ParticleNoise::new(8, 50, 1);
    let x0 = initial_ensemble(&mut noise).unwrap();
    let mut t = MomentTracker::new(vec![2, 4], None).unwrap();
    run_trajectory(&sim, x0, &mut noise, &mut [&mut t]).unwrap();
    let reports = t.reports();
    assert_eq!(reports.len(), 2);
    // stationary second moment is 1 / 2.4 plus the mean's share
    let m2 = &reports[0];
    assert!(m2.final_value > 0.2 && m2.final_value < 0.7, "{m2:?}");
    assert!(m2.second_half_growth < 1.5);
    assert!(t.alarm_step().is_none());
    let sup = t.running_sup(2).unwrap();
    assert!(sup.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn moment_tracker_rejects_odd_powers() {
    assert!(MomentTracker::new(vec![3], None).is_err());
}

#[test]
fn sweep_and_clt_preconditions() {
    let cfg = load_config(common::config_path("linear_fig1")).unwrap();
    assert!(l2_error_sweep(&cfg, &[5], 1).is_err());
    // constant schedules do not satisfy the rate conditions
    assert!(clt_rescaled_moments(&cfg, &CltSpec { estimator: 0 }, 10).is_err());
    let clt = load_config(common::config_path("linear_clt")).unwrap();
    assert!(clt_rescaled_moments(&clt, &CltSpec { estimator: 0 }, 2).is_err());
}

#[test]
fn small_sweep_has_one_row_per_free_parameter() {
    let mut cfg = load_config(common::config_path("linear_fig2")).unwrap();
    cfg.n_steps = 200;
    let table = l2_error_sweep(&cfg, &[3, 5], 3).unwrap();
    // two estimators, one free parameter, two particle counts
    assert_eq!(table.rows.len(), 4);
    assert!(table.get(3, "triplet", "theta1").is_some());
    assert!(table.get(3, "triplet", "theta2").is_none());
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("N,estimator,param,mse,stderr,excluded_count\n"));
}

#[test]
fn stats_hand_values() {
    let xs = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(mean(&xs), 2.5);
    assert!((sample_variance(&xs).unwrap() - 5.0 / 3.0).abs() < 1e-15);
    let m = moments(&[1.0, 2.0, 3.0]).unwrap();
    assert!(m.skewness.abs() < 1e-15);
}

proptest! {
    #[test]
    fn rho_is_nonincreasing_in_n(n in 1u64..1_000_000, d in 1usize..8) {
        prop_assert!(rho_rate(n + 1, d).unwrap() <= rho_rate(n, d).unwrap() * (1.0 + 1e-12) || d == 4);
    }

    #[test]
    fn rate_function_decays_in_time(t in 0.0f64..100.0, x in 0.1f64..10.0, alpha in 0.0f64..3.0) {
        let a = rate_function_a(t, x, alpha, 1.0, 1.0).unwrap();
        let b = rate_function_a(t + 1.0, x, alpha, 1.0, 1.0).unwrap();
        prop_assert!(b <= a);
    }
}
