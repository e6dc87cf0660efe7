//! Panel data and the covariates derived from it.

mod dataset;
mod derived;
mod joint;
mod kinds;

pub use dataset::{compare_ids, IngestOptions, PanelDataset, Patient, Visit, CSV_HEADER};
pub use derived::{
    attained_damaged_count, compute_ama, opposite_joint_damaged, DerivedCovariates,
};
pub use joint::{encode_joint_type, Hand, JointId, Site, JOINTS_PER_HAND, N_JOINTS};
pub use kinds::{CovariateKind, JOINT_TYPE_COLUMNS};
