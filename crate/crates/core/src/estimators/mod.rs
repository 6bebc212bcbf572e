//! Online parameter estimators driven by the observation stream.
//!
//! Every estimator discretizes a stochastic gradient flow on the step grid of
//! the simulation, with the parameter evaluated at the start of each step.

mod estimator;
mod schedule;
mod triplets;
mod updates;

pub use estimator::{EstimateRecord, Estimator, EstimatorKind, ESTIMATE_CSV_HEADER};
pub use schedule::{validate_schedule, LearningRateSchedule, ScheduleKind, ScheduleReport};
pub use triplets::{build_cyclic_triplets, Triplet, TripletSet};
pub use updates::{
    project_constraint, rmsprop_precondition, update_averaged, update_diffusion, update_m_averaged_full,
    update_m_averaged_triplet, update_three_particle, DiffusionForm, EstimatorState, RmsProp, TripletObservation,
    UpdateSettings,
};
