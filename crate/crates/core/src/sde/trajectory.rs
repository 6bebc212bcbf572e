use std::io::Write;

use serde::Serialize;

use super::{advance_step, IncrementBatch, ParticleEnsemble, ParticleNoise, GENERATOR_NAME};
use crate::error::{Error, Result};
use crate::models::{ModelSpec, TruthSchedule};
use crate::scalar::Scalar;

/// What an observer sees after each Euler step.
#[derive(Debug)]
pub struct StepView<'a, T: Scalar> {
    /// Zero-based index of the step.
    pub step: u64,
    pub dt: T,
    /// State at the start of the step; `before.time` is the step start time.
    pub before: &'a ParticleEnsemble<T>,
    pub increments: &'a IncrementBatch<T>,
    pub after: &'a ParticleEnsemble<T>,
    /// Truth used for this step.
    pub theta_true: &'a [T],
}

impl<T: Scalar> StepView<'_, T> {
    pub fn time(&self) -> T {
        self.before.time
    }
}

/// Per-step hook driven by [`run_trajectory`].
pub trait Observer<T: Scalar> {
    fn observe(&mut self, view: &StepView<'_, T>) -> Result<()>;

    /// Called once when the run ends, including when it ends in an error.
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// The simulation part of an experiment.
#[derive(Debug, Clone)]
pub struct SimulationSpec<T: Scalar> {
    pub model: ModelSpec<T>,
    pub truth: TruthSchedule<T>,
    pub eta_true: Option<Vec<T>>,
    pub dt: T,
    pub n_steps: u64,
}

impl<T: Scalar> SimulationSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::validation("dt", "must be positive and finite"));
        }
        if self.n_steps == 0 {
            return Err(Error::validation("n_steps", "must be at least 1"));
        }
        self.truth.validate()?;
        if self.truth.dim() != self.model.param_dim() {
            return Err(Error::validation(
                "truth",
                format!("model `{}` has {} parameters, truth has {}", self.model.id(), self.model.param_dim(), self.truth.dim()),
            ));
        }
        let m = self.model.diffusion_param_dim();
        match &self.eta_true {
            None if m > 0 => return Err(Error::validation("eta_true", "required for a parameterized diffusion")),
            Some(e) if e.len() != m => {
                return Err(Error::validation("eta_true", format!("expected {m} diffusion parameters")))
            }
            _ => {}
        }
        Ok(())
    }

    /// Start time of step `step`, computed from the index to avoid drift.
    #[inline]
    pub fn time_of(&self, step: u64) -> T {
        T::lit(step as f64) * self.dt
    }
}

/// Runs `n_steps` Euler steps from `initial`, calling every observer once per step.
///
/// Observers are finished even when a step fails, so partial outputs are flushed
/// before the error is returned.
pub fn run_trajectory<T: Scalar>(
    spec: &SimulationSpec<T>,
    initial: ParticleEnsemble<T>,
    noise: &mut ParticleNoise,
    observers: &mut [&mut dyn Observer<T>],
) -> Result<ParticleEnsemble<T>> {
    spec.validate()?;
    let outcome = drive(spec, initial, noise, observers);
    let mut finish_err = None;
    for obs in observers.iter_mut() {
        if let Err(e) = obs.finish() {
            finish_err.get_or_insert(e);
        }
    }
    let state = outcome?;
    match finish_err {
        Some(e) => Err(e),
        None => Ok(state),
    }
}

fn drive<T: Scalar>(
    spec: &SimulationSpec<T>,
    initial: ParticleEnsemble<T>,
    noise: &mut ParticleNoise,
    observers: &mut [&mut dyn Observer<T>],
) -> Result<ParticleEnsemble<T>> {
    let mut state = initial;
    let eta = spec.eta_true.as_deref();
    for step in 0..spec.n_steps {
        state.time = spec.time_of(step);
        let theta = spec.truth.truth_at(state.time);
        let (mut next, inc) = advance_step(&state, &spec.model, &theta, eta, spec.dt, noise, step)?;
        next.time = spec.time_of(step + 1);
        let view = StepView { step, dt: spec.dt, before: &state, increments: &inc, after: &next, theta_true: &theta };
        for obs in observers.iter_mut() {
            obs.observe(&view)?;
        }
        state = next;
    }
    Ok(state)
}

/// Initial ensemble drawn from the noise streams (standard normal), at time 0.
pub fn initial_ensemble<T: Scalar>(noise: &mut ParticleNoise) -> Result<ParticleEnsemble<T>> {
    let pos = noise.initial_positions();
    ParticleEnsemble::new(T::zero(), noise.n_particles(), noise.state_dim(), pos)
}

/// Metadata written next to a trajectory dump.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryMeta<T: Scalar + Serialize> {
    pub seed: u64,
    pub generator: &'static str,
    pub dt: T,
    pub model_id: String,
    pub truth: TruthSchedule<T>,
    pub n_particles: usize,
    pub n_steps: u64,
    pub record_every: u64,
    pub version: &'static str,
}

impl<T: Scalar + Serialize> TrajectoryMeta<T> {
    pub fn new(spec: &SimulationSpec<T>, seed: u64, n_particles: usize, record_every: u64) -> Self {
        Self {
            seed,
            generator: GENERATOR_NAME,
            dt: spec.dt,
            model_id: spec.model.id().to_string(),
            truth: spec.truth.clone(),
            n_particles,
            n_steps: spec.n_steps,
            record_every,
            version: crate::VERSION,
        }
    }
}

/// Observer writing `step,time,particle,coord,value` rows.
///
/// Row `step = s` holds the state after `s` steps; step 0 is written on
/// construction.
pub struct TrajectoryWriter<W: Write> {
    out: W,
    every: u64,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new<T: Scalar>(mut out: W, initial: &ParticleEnsemble<T>, every: u64) -> Result<Self> {
        if every == 0 {
            return Err(Error::validation("record_every", "must be at least 1"));
        }
        writeln!(out, "step,time,particle,coord,value")?;
        write_rows(&mut out, 0, initial)?;
        Ok(Self { out, every })
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

fn write_rows<T: Scalar, W: Write>(out: &mut W, step: u64, ens: &ParticleEnsemble<T>) -> Result<()> {
    for (i, row) in ens.rows().enumerate() {
        for (c, v) in row.iter().enumerate() {
            writeln!(out, "{step},{},{i},{c},{}", ens.time, v)?;
        }
    }
    Ok(())
}

impl<T: Scalar, W: Write> Observer<T> for TrajectoryWriter<W> {
    fn observe(&mut self, view: &StepView<'_, T>) -> Result<()> {
        let s = view.step + 1;
        if s % self.every == 0 {
            write_rows(&mut self.out, s, view.after)?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Observer keeping the full path in memory (`(n_steps + 1) x N x d`).
#[derive(Debug, Clone, Default)]
pub struct PathRecorder<T> {
    pub states: Vec<Vec<T>>,
}

impl<T: Scalar> PathRecorder<T> {
    pub fn new(initial: &ParticleEnsemble<T>) -> Self {
        Self { states: vec![initial.positions().to_vec()] }
    }
}

impl<T: Scalar> Observer<T> for PathRecorder<T> {
    fn observe(&mut self, view: &StepView<'_, T>) -> Result<()> {
        self.states.push(view.after.positions().to_vec());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_model;

    fn spec(n_steps: u64) -> SimulationSpec<f64> {
        SimulationSpec {
            model: build_model("kuramoto", 1.0).unwrap(),
            truth: TruthSchedule::Changepoint { start: vec![1.5], end: vec![0.2], switch_time: 500.0 },
            eta_true: None,
            dt: 0.1,
            n_steps,
        }
    }

    struct TruthLog(Vec<(u64, f64)>);
    impl Observer<f64> for TruthLog {
        fn observe(&mut self, v: &StepView<'_, f64>) -> Result<()> {
            self.0.push((v.step, v.theta_true[0]));
            Ok(())
        }
    }

    #[test]
    fn zero_steps_rejected() {
        let mut noise = ParticleNoise::new(1, 3, 1);
        let x0 = initial_ensemble(&mut noise).unwrap();
        assert!(run_trajectory(&spec(0), x0, &mut noise, &mut []).is_err());
    }

    #[test]
    fn changepoint_switches_at_step_5000() {
        let mut noise = ParticleNoise::new(1, 3, 1);
        let x0 = initial_ensemble(&mut noise).unwrap();
        let mut log = TruthLog(Vec::new());
        run_trajectory(&spec(5002), x0, &mut noise, &mut [&mut log]).unwrap();
        assert_eq!(log.0[4999], (4999, 1.5));
        assert_eq!(log.0[5000], (5000, 0.2));
    }

    #[test]
    fn writer_output_is_deterministic() {
        let run = || {
            let mut noise = ParticleNoise::new(9, 4, 1);
            let x0 = initial_ensemble::<f64>(&mut noise).unwrap();
            let mut w = TrajectoryWriter::new(Vec::new(), &x0, 5).unwrap();
            run_trajectory(&spec(50), x0, &mut noise, &mut [&mut w]).unwrap();
            w.into_inner()
        };
        let a = run();
        assert_eq!(a, run());
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("step,time,particle,coord,value\n0,0,0,0,"));
        assert_eq!(text.lines().count(), 1 + 4 * 11);
    }
}
