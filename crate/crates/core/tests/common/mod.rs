#![allow(dead_code)]

use ipsgd::models::{build_model, MODEL_IDS};
use ipsgd::{Ensemble, Model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CONFIG_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");

pub fn config_path(name: &str) -> String {
    format!("{CONFIG_DIR}/{name}.json")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(r: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(lo..hi)).collect()
}

pub fn random_ensemble(r: &mut ChaCha8Rng, n: usize, d: usize) -> Ensemble {
    Ensemble::new(0.0, n, d, uniform_vec(r, n * d, -2.0, 2.0)).unwrap()
}

/// Every zoo model; `vol32` positions are kept away from zero by the caller when needed.
pub fn all_models() -> Vec<Model> {
    MODEL_IDS.iter().map(|id| build_model(id, 1.0).unwrap()).collect()
}

/// Parameter vectors inside the region where every zoo model is smooth.
pub fn random_theta(r: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    uniform_vec(r, p, 0.1, 2.0)
}
