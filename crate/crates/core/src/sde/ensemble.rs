use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Full state of an N-particle system in R^d at one time.
///
/// Positions are stored row-major: particle `i` occupies
/// `positions[i * d..(i + 1) * d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble<T> {
    pub time: T,
    n_particles: usize,
    state_dim: usize,
    positions: Vec<T>,
}

impl<T: Scalar> ParticleEnsemble<T> {
    pub fn new(time: T, n_particles: usize, state_dim: usize, positions: Vec<T>) -> Result<Self> {
        if n_particles == 0 || state_dim == 0 {
            return Err(Error::InvalidInput("ensemble needs N >= 1 and d >= 1".into()));
        }
        if positions.len() != n_particles * state_dim {
            return Err(Error::InvalidInput(format!(
                "expected {} position entries for N={n_particles}, d={state_dim}, got {}",
                n_particles * state_dim,
                positions.len()
            )));
        }
        if !positions.iter().all(|v| v.is_finite()) || !time.is_finite() {
            return Err(Error::InvalidInput("ensemble entries must be finite".into()));
        }
        Ok(Self { time, n_particles, state_dim, positions })
    }

    /// Build from one row per particle.
    pub fn from_rows(time: T, rows: &[Vec<T>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("ragged particle rows".into()));
        }
        Self::new(time, rows.len(), d, rows.concat())
    }

    pub fn zeros(n_particles: usize, state_dim: usize) -> Result<Self> {
        Self::new(T::zero(), n_particles, state_dim, vec![T::zero(); n_particles * state_dim])
    }

    #[inline]
    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    #[inline]
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    #[inline]
    pub fn particle(&self, i: usize) -> &[T] {
        let d = self.state_dim;
        &self.positions[i * d..(i + 1) * d]
    }

    #[inline]
    pub fn particle_mut(&mut self, i: usize) -> &mut [T] {
        let d = self.state_dim;
        &mut self.positions[i * d..(i + 1) * d]
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.positions.chunks_exact(self.state_dim)
    }

    /// Per-coordinate empirical mean, accumulated in particle order.
    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.state_dim];
        for row in self.rows() {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += *v;
            }
        }
        let n = T::from_usize_lossy(self.n_particles);
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Sub-ensemble made of the first `n` particles.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_particles {
            return Err(Error::InvalidInput(format!("cannot truncate {} particles to {n}", self.n_particles)));
        }
        Self::new(self.time, n, self.state_dim, self.positions[..n * self.state_dim].to_vec())
    }
}

/// Returns `y^i = x^i - mean(x)` for every particle.
pub fn center_particles<T: Scalar>(ensemble: &ParticleEnsemble<T>) -> ParticleEnsemble<T> {
    let mean = ensemble.mean();
    let mut out = ensemble.clone();
    for i in 0..out.n_particles() {
        for (v, m) in out.particle_mut(i).iter_mut().zip(&mean) {
            *v -= *m;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(ParticleEnsemble::<f64>::new(0.0, 0, 1, vec![]).is_err());
        assert!(ParticleEnsemble::<f64>::new(0.0, 2, 1, vec![1.0]).is_err());
        assert!(ParticleEnsemble::<f64>::new(0.0, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn centering_two_points() {
        let e = ParticleEnsemble::from_rows(0.0, &[vec![1.0], vec![3.0]]).unwrap();
        let c = center_particles(&e);
        assert_eq!(c.positions(), &[-1.0, 1.0]);
    }

    #[test]
    fn centering_is_idempotent() {
        let e = ParticleEnsemble::from_rows(0.0, &[vec![-1.0, 2.0], vec![1.0, -2.0]]).unwrap();
        assert_eq!(center_particles(&e), e);
    }

    #[test]
    fn centering_random_matrix_has_zero_column_sums() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pos: Vec<f64> = (0..100).map(|_| rng.random_range(-5.0..5.0)).collect();
        let e = ParticleEnsemble::new(0.0, 50, 2, pos).unwrap();
        let c = center_particles(&e);
        for k in 0..2 {
            let s: f64 = c.rows().map(|r| r[k]).sum();
            assert!(s.abs() < 1e-12, "column {k} sum {s}");
        }
    }
}
