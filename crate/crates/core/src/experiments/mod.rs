//! Experiment configuration, replicate orchestration and output writing.

mod config;
mod output;
mod runner;

pub use config::{
    load_config, parse_config, BoxSpec, EstimatorKindName, EstimatorSpec, ExperimentConfig, ParticleInit, SweepSpec,
    UniformBox,
};
pub use output::{run_experiment, Artifact, Command, Manifest};
pub use runner::{
    build_estimators, replicate_seed, run_replicate, run_replicates, simulation_spec, EstimatorOutcome,
    ReplicateOutcome,
};
