//! Simulation and online parameter estimation for weakly interacting particle systems.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, which is what the experiments use.

pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod models;
pub mod objective;
pub mod scalar;
pub mod sde;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Version string recorded in output metadata.
pub const VERSION: &str = concat!("ipsgd ", env!("CARGO_PKG_VERSION"));

pub type Ensemble = sde::ParticleEnsemble<f64>;
pub type Increments = sde::IncrementBatch<f64>;
pub type Model = models::ModelSpec<f64>;
pub type Truth = models::TruthSchedule<f64>;
pub type Simulation = sde::SimulationSpec<f64>;
