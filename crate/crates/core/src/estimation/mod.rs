//! Maximum likelihood estimation, standard errors and reporting.

mod fit;
mod hessian;
mod optimizer;
mod report;

pub use fit::{
    build_estimates, crude_rates, fit, initial_values, natural_estimate, CrudeRates, FitOptions,
    FitResult, ParamEstimate,
};
pub use hessian::{covariance_from_hessian, numerical_hessian, wald_interval, Covariance};
pub use optimizer::{bfgs_maximize, finite_difference_gradient, OptimizerOptions, OptimizerOutcome};
pub use report::{metadata_block, parameter_table, parse_parameter_table, table_report, PARAMETER_HEADER};
