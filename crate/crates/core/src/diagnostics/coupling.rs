use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sde::{advance_step, initial_ensemble, ParticleEnsemble, ParticleNoise, SimulationSpec};

fn default_n_big() -> usize {
    500
}
fn default_coupling_replicates() -> usize {
    3
}

/// Coupling-distance settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub n_small: Vec<usize>,
    /// Size of the system standing in for the mean-field limit.
    #[serde(default = "default_n_big")]
    pub n_big: usize,
    #[serde(default = "default_coupling_replicates")]
    pub replicates: usize,
}

/// Mean squared distance between the first `n_small` particles of two
/// synchronously coupled systems, one value per step (index 0 = initial state).
///
/// Both systems use the same seed, so particle `i` has the same initial
/// position and Brownian path in each.
pub fn coupling_distance(sim: &SimulationSpec<f64>, n_small: usize, n_big: usize, seed: u64) -> Result<Vec<f64>> {
    let d = sim.model.state_dim();
    let mut noise_small = ParticleNoise::new(seed, n_small, d);
    let mut noise_big = ParticleNoise::new(seed, n_big, d);
    let small = initial_ensemble(&mut noise_small)?;
    let big = initial_ensemble(&mut noise_big)?;
    coupling_distance_from(sim, small, big, &mut noise_small, &mut noise_big)
}

/// As [`coupling_distance`], from given initial states and noise sources.
pub fn coupling_distance_from(
    sim: &SimulationSpec<f64>,
    mut small: ParticleEnsemble<f64>,
    mut big: ParticleEnsemble<f64>,
    noise_small: &mut ParticleNoise,
    noise_big: &mut ParticleNoise,
) -> Result<Vec<f64>> {
    sim.validate()?;
    let n = small.n_particles();
    if n == 0 || n > big.n_particles() {
        return Err(Error::InvalidInput("coupling needs 1 <= N_small <= N_big".into()));
    }
    let eta = sim.eta_true.as_deref();
    let mut out = Vec::with_capacity(sim.n_steps as usize + 1);
    out.push(distance(&small, &big, n));
    for step in 0..sim.n_steps {
        let t = sim.time_of(step);
        small.time = t;
        big.time = t;
        let theta = sim.truth.truth_at(t);
        small = advance_step(&small, &sim.model, &theta, eta, sim.dt, noise_small, step)?.0;
        big = advance_step(&big, &sim.model, &theta, eta, sim.dt, noise_big, step)?.0;
        out.push(distance(&small, &big, n));
    }
    Ok(out)
}

fn distance(small: &ParticleEnsemble<f64>, big: &ParticleEnsemble<f64>, n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for (a, b) in small.particle(i).iter().zip(big.particle(i)) {
            acc += (a - b) * (a - b);
        }
    }
    acc / n as f64
}

/// Time-averaged coupling distance per `n_small`, averaged over seeds
/// `seed, seed + 1, ...`.
pub fn coupling_sweep(sim: &SimulationSpec<f64>, spec: &CouplingSpec, seed: u64) -> Result<Vec<(usize, f64)>> {
    spec.n_small
        .iter()
        .map(|&n| {
            let mut total = 0.0;
            for r in 0..spec.replicates {
                let series = coupling_distance(sim, n, spec.n_big, seed.wrapping_add(r as u64))?;
                total += super::stats::mean(&series);
            }
            Ok((n, total / spec.replicates as f64))
        })
        .collect()
}
