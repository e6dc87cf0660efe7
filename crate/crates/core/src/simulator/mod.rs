//! Synthetic cohorts from the six- and five-state models with known truth.

mod cohort;
mod config;

pub use cohort::{
    empirical_transition_table, patient_rng, sample_interval_end, simulate_cohort, Jump,
    PatientTruth, SimulatedCohort,
};
pub use config::{CovariateGenerator, SimConfig, VisitSchedule};
