//! Euler-Maruyama simulation of the interacting particle system.

mod ensemble;
mod rng;
mod stepper;
mod trajectory;

pub use ensemble::{center_particles, ParticleEnsemble};
pub use rng::{ParticleNoise, RngStream, AUX_STREAM_BASE, GENERATOR_NAME};
pub use stepper::{advance_step, IncrementBatch, BLOWUP_THRESHOLD};
pub use trajectory::{
    initial_ensemble, run_trajectory, Observer, PathRecorder, SimulationSpec, StepView, TrajectoryMeta,
    TrajectoryWriter,
};
