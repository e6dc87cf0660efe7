//! State spaces, parameter vectors, and the maps from covariates and
//! random-effect realizations to transition intensities.
//!
//! The six-state model regresses the activation (1->2), deactivation (2->1)
//! and damage (1->3) intensities on covariates; the remaining mover and
//! stayer intensities are tied to those three through multiplicative
//! linkage coefficients. The five-state model regresses mean sojourn times
//! and the log-odds of jumping to damage instead, and converts them to
//! intensities through a smooth bijection.

mod intensity;
mod params;
mod spec;
mod states;

pub use intensity::{
    five_state_sojourn_params, intensities_to_sojourn, mover_six_state_intensities,
    six_state_intensities, sojourn_to_intensities, stayer_intensities, FiveStateIntensities,
    FourStateRates, IntensitySet, SixStateIntensities, SixStateLinks, SojournJump,
    ThreeStateRates, TwoStateRates,
};
pub use params::{
    layout, logistic, FiveStateParams, ParamInfo, Params, RandomEffectsParams, Regression,
    SixStateParams, Transform,
};
pub use spec::{ModelSpec, RandomEffectsStructure};
pub use states::{
    observed_index, FiveStateCode, Hypothesis, JointStatus, ModelKind, SixStateCode,
    FIVE_STATE_REGRESSIONS, SIX_STATE_REGRESSIONS,
};
