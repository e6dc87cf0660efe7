//! Clustered continuous-time multi-state Markov models for panel-observed
//! joint-level data.
//!
//! Each of a patient's joints follows its own activity/damage process; the
//! joints of one patient share bivariate normal random effects (per visit
//! interval, or per patient), and patients belong to a latent mover or
//! stayer class. The crate covers:
//!
//! * [`model`]: state spaces, parameters and intensity regressions,
//! * [`kernels`]: closed-form transition probability matrices plus a
//!   scaling-and-squaring matrix exponential,
//! * [`covariates`]: the panel dataset and its dynamic covariates,
//! * [`likelihood`]: Gauss-Hermite marginal likelihood with the mover-stayer
//!   mixture,
//! * [`estimation`]: BFGS maximum likelihood, numerical Hessian, Wald
//!   intervals and reports,
//! * [`simulator`]: synthetic cohorts with known truth,
//! * [`cli`]: the command layer behind the `cmsm` binary.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cli;
pub mod covariates;
pub mod error;
pub mod estimation;
pub mod kernels;
pub mod likelihood;
pub mod model;
pub mod simulator;

pub use error::{Error, Result};
