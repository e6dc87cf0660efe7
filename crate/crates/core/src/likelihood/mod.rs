//! Marginal likelihood: per-interval kernel products, Gauss-Hermite
//! integration over the random effects and the mover-stayer mixture.

mod compiled;
mod direct;
mod quadrature;

pub use compiled::{
    compile_patient, exact_sum, floor_hits, patient_conditional_loglik, patient_marginal_loglik,
    total_loglik, CompiledPatient, Likelihood,
};
pub use direct::interval_block;
pub use quadrature::{
    bivariate_integrate, gauss_hermite_rule, log_sum_exp, BivariateGrid, QuadratureRule,
};
