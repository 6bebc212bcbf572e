use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Name of the normal generator, recorded in every output sidecar.
pub const GENERATOR_NAME: &str = "chacha8-ziggurat";

/// Stream id offset for draws that are not tied to a particle (initial estimates).
pub const AUX_STREAM_BASE: u64 = 1 << 32;

/// One independent stream of standard normals, identified by `(seed, stream_id)`.
///
/// ChaCha8 is counter based, so distinct stream ids give non-overlapping
/// sequences under the same key.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            return lo;
        }
        self.rng.random_range(lo..hi)
    }

    /// `n x d` matrix (row-major) of i.i.d. `Normal(0, dt)` entries.
    pub fn generate_increments<T: Scalar>(&mut self, n: usize, d: usize, dt: T) -> Result<Vec<T>> {
        let sd = checked_sqrt_dt(dt)?;
        Ok((0..n * d).map(|_| T::lit(self.standard_normal() * sd)).collect())
    }
}

fn checked_sqrt_dt<T: Scalar>(dt: T) -> Result<f64> {
    let dt = dt.to_f64_lossy();
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidConfig(format!("time step must be positive, got {dt}")));
    }
    Ok(dt.sqrt())
}

/// Brownian source for a whole system: particle `i` draws from stream `i`.
///
/// The first `d` normals of each stream are the particle's initial position,
/// so two systems sharing a seed are synchronously coupled on their common
/// particles.
#[derive(Debug, Clone)]
pub struct ParticleNoise {
    streams: Vec<RngStream>,
    state_dim: usize,
}

impl ParticleNoise {
    pub fn new(seed: u64, n_particles: usize, state_dim: usize) -> Self {
        let streams = (0..n_particles as u64).map(|i| RngStream::new(seed, i)).collect();
        Self { streams, state_dim }
    }

    /// Relabelled noise: particle `i` uses stream `order[i]`.
    pub fn with_stream_ids(seed: u64, order: &[u64], state_dim: usize) -> Self {
        Self { streams: order.iter().map(|&s| RngStream::new(seed, s)).collect(), state_dim }
    }

    pub fn n_particles(&self) -> usize {
        self.streams.len()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Standard normal initial positions, one row per particle.
    pub fn initial_positions<T: Scalar>(&mut self) -> Vec<T> {
        let d = self.state_dim;
        let mut out = Vec::with_capacity(self.streams.len() * d);
        for s in &mut self.streams {
            for _ in 0..d {
                out.push(T::lit(s.standard_normal()));
            }
        }
        out
    }

    /// Brownian increments for one step, written row-major into `out`.
    pub fn fill_increments<T: Scalar>(&mut self, dt: T, out: &mut [T]) -> Result<()> {
        let sd = checked_sqrt_dt(dt)?;
        let d = self.state_dim;
        for (s, row) in self.streams.iter_mut().zip(out.chunks_exact_mut(d)) {
            for v in row {
                *v = T::lit(s.standard_normal() * sd);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_stream_reproduce() {
        let a: Vec<f64> = RngStream::new(1, 0).generate_increments(2, 1, 0.1).unwrap();
        let b: Vec<f64> = RngStream::new(1, 0).generate_increments(2, 1, 0.1).unwrap();
        assert_eq!(a, b);
        let c: Vec<f64> = RngStream::new(1, 1).generate_increments(2, 1, 0.1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn nonpositive_dt_is_rejected() {
        assert!(RngStream::new(1, 0).generate_increments::<f64>(2, 1, 0.0).is_err());
        assert!(RngStream::new(1, 0).generate_increments::<f64>(2, 1, -0.1).is_err());
    }

    #[test]
    fn increment_variance_matches_dt() {
        let draws: Vec<f64> = RngStream::new(7, 3).generate_increments(1_000_000, 1, 0.1).unwrap();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / 0.1 - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let a: Vec<f64> = RngStream::new(5, 0).generate_increments(100_000, 1, 1.0).unwrap();
        let b: Vec<f64> = RngStream::new(5, 1).generate_increments(100_000, 1, 1.0).unwrap();
        let corr = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64;
        // 5 standard errors
        assert!(corr.abs() < 5.0 / (a.len() as f64).sqrt());
    }
}
