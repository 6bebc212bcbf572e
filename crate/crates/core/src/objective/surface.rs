use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{contrast_ell, drift_mean, sub};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sde::{initial_ensemble, run_trajectory, Observer, ParticleNoise, SimulationSpec, StepView, GENERATOR_NAME};

/// Which contrast is averaged along the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanKind {
    /// `L` at particle 0.
    #[serde(rename = "L_iN")]
    LiN,
    /// `l` on the triplet `(0, 1, 2)`.
    #[serde(rename = "L_ijkN")]
    LijkN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    /// One trajectory shared by every grid point.
    #[default]
    Shared,
    /// An independent trajectory per grid point (seed `seed + point index`).
    Fresh,
}

/// Grid and averaging window of a surface scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec<T> {
    /// One sorted grid per parameter.
    pub axes: Vec<Vec<T>>,
    /// Number of simulated steps.
    pub horizon: u64,
    /// Steps discarded before averaging; defaults to 10% of the horizon.
    #[serde(default)]
    pub burn_in: Option<u64>,
    pub kind: ScanKind,
    #[serde(default)]
    pub mode: ScanMode,
}

impl<T: Scalar> SurfaceSpec<T> {
    pub fn burn_in_steps(&self) -> u64 {
        self.burn_in.unwrap_or(self.horizon / 10)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.axes.len() != p {
            return Err(Error::validation("surface.axes", format!("need one axis per parameter ({p})")));
        }
        for (a, axis) in self.axes.iter().enumerate() {
            if axis.is_empty() || axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::validation(format!("surface.axes[{a}]"), "must be non-empty, finite and strictly increasing"));
            }
        }
        if self.horizon <= self.burn_in_steps() {
            return Err(Error::validation("surface.horizon", "must exceed the burn-in"));
        }
        Ok(())
    }

    /// Grid points in row-major order (last axis fastest).
    pub fn points(&self) -> Vec<Vec<T>> {
        let mut pts = vec![Vec::new()];
        for axis in &self.axes {
            pts = pts
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        pts
    }
}

/// Time-averaged contrast over a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridScan<T: Serialize> {
    pub axes: Vec<Vec<T>>,
    /// Row-major, shape = product of axis lengths.
    pub values: Vec<T>,
    pub kind: ScanKind,
    pub horizon: u64,
    pub burn_in: u64,
    pub n_particles: usize,
    pub seed: u64,
}

impl<T: Scalar + Serialize> GridScan<T> {
    pub fn points(&self) -> Vec<Vec<T>> {
        SurfaceSpec { axes: self.axes.clone(), horizon: 0, burn_in: None, kind: self.kind, mode: ScanMode::Shared }.points()
    }

    /// `theta_1,...,theta_p,value` rows with header.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let header: Vec<String> = (1..=self.axes.len()).map(|k| format!("theta_{k}")).collect();
        writeln!(out, "{},value", header.join(","))?;
        for (pt, v) in self.points().iter().zip(&self.values) {
            let cells: Vec<String> = pt.iter().map(|c| c.to_string()).collect();
            writeln!(out, "{},{}", cells.join(","), v)?;
        }
        Ok(())
    }

    /// Sidecar metadata.
    pub fn metadata(&self, model_id: &str, dt: T) -> serde_json::Value {
        serde_json::json!({
            "model_id": model_id,
            "kind": self.kind,
            "horizon": self.horizon,
            "burn_in": self.burn_in,
            "n_particles": self.n_particles,
            "seed": self.seed,
            "dt": dt.to_f64_lossy(),
            "generator": GENERATOR_NAME,
            "version": crate::VERSION,
        })
    }
}

/// Observer accumulating the contrast at every grid point.
#[derive(Debug, Clone)]
pub struct SurfaceAccumulator<T: Scalar> {
    model: crate::models::ModelSpec<T>,
    points: Vec<Vec<T>>,
    kind: ScanKind,
    burn_in: u64,
    sums: Vec<T>,
    count: u64,
}

impl<T: Scalar> SurfaceAccumulator<T> {
    pub fn new(model: crate::models::ModelSpec<T>, points: Vec<Vec<T>>, kind: ScanKind, burn_in: u64) -> Self {
        let n = points.len();
        Self { model, points, kind, burn_in, sums: vec![T::zero(); n], count: 0 }
    }

    pub fn averages(&self) -> Vec<T> {
        let c = T::lit(self.count.max(1) as f64);
        self.sums.iter().map(|s| *s / c).collect()
    }
}

impl<T: Scalar> Observer<T> for SurfaceAccumulator<T> {
    fn observe(&mut self, view: &StepView<'_, T>) -> Result<()> {
        if view.step < self.burn_in {
            return Ok(());
        }
        let ens = view.before;
        let x = ens.particle(0);
        match self.kind {
            ScanKind::LiN => {
                let b0 = drift_mean(&self.model, view.theta_true, x, ens);
                for (pt, acc) in self.points.iter().zip(self.sums.iter_mut()) {
                    let r = sub(&drift_mean(&self.model, pt, x, ens), &b0);
                    *acc += T::lit(0.5) * self.model.weighted_dot(&r, &r);
                }
            }
            ScanKind::LijkN => {
                if ens.n_particles() < 3 {
                    return Err(Error::Infeasible("L_ijkN needs at least 3 particles".into()));
                }
                let (y, z) = (ens.particle(1), ens.particle(2));
                for (pt, acc) in self.points.iter().zip(self.sums.iter_mut()) {
                    *acc += contrast_ell(&self.model, pt, view.theta_true, x, y, z, ens)?;
                }
            }
        }
        self.count += 1;
        Ok(())
    }
}

/// Simulates under the truth of `sim` and averages the contrast over the
/// post-burn-in steps at every grid point.
pub fn surface_scan<T: Scalar + Serialize>(
    sim: &SimulationSpec<T>,
    n_particles: usize,
    spec: &SurfaceSpec<T>,
    seed: u64,
) -> Result<GridScan<T>> {
    spec.validate(sim.model.param_dim())?;
    if spec.kind == ScanKind::LijkN && n_particles < 3 {
        return Err(Error::Infeasible("L_ijkN needs at least 3 particles".into()));
    }
    let mut sim = sim.clone();
    sim.n_steps = spec.horizon;
    let burn_in = spec.burn_in_steps();
    let points = spec.points();
    let d = sim.model.state_dim();
    let values = match spec.mode {
        ScanMode::Shared => {
            let mut acc = SurfaceAccumulator::new(sim.model.clone(), points, spec.kind, burn_in);
            let mut noise = ParticleNoise::new(seed, n_particles, d);
            let x0 = initial_ensemble(&mut noise)?;
            run_trajectory(&sim, x0, &mut noise, &mut [&mut acc])?;
            acc.averages()
        }
        ScanMode::Fresh => {
            let mut out = Vec::with_capacity(points.len());
            for (k, pt) in points.into_iter().enumerate() {
                let mut acc = SurfaceAccumulator::new(sim.model.clone(), vec![pt], spec.kind, burn_in);
                let mut noise = ParticleNoise::new(seed.wrapping_add(k as u64), n_particles, d);
                let x0 = initial_ensemble(&mut noise)?;
                run_trajectory(&sim, x0, &mut noise, &mut [&mut acc])?;
                out.push(acc.averages()[0]);
            }
            out
        }
    };
    Ok(GridScan {
        axes: spec.axes.clone(),
        values,
        kind: spec.kind,
        horizon: spec.horizon,
        burn_in,
        n_particles,
        seed,
    })
}
