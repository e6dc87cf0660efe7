use std::time::{Duration, Instant};

use log::{info, warn};
use nalgebra::DMatrix;

use super::hessian::{covariance_from_hessian, numerical_hessian, wald_interval};
use super::optimizer::{bfgs_maximize, OptimizerOptions};
use crate::covariates::PanelDataset;
use crate::error::{Error, Result};
use crate::likelihood::{floor_hits, Likelihood};
use crate::model::{
    layout, FiveStateParams, ModelKind, ModelSpec, Params, RandomEffectsParams, SixStateParams,
    Transform,
};

/// One reported parameter on its natural scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamEstimate {
    pub key: String,
    pub group: String,
    pub name: String,
    pub estimate: f64,
    /// `NaN` when unavailable (flagged curvature or not computed).
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ParamEstimate {
    pub fn has_interval(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub optimizer: OptimizerOptions,
    pub standard_errors: bool,
    /// Starting point; crude-rate defaults when absent.
    pub initial: Option<Params>,
    /// Parameter keys held at their starting values. They get no standard
    /// error and are left out of the Hessian and covariance.
    pub fixed: Vec<String>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optimizer: OptimizerOptions::default(),
            standard_errors: true,
            initial: None,
            fixed: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub params: Params,
    pub estimates: Vec<ParamEstimate>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub message: String,
    pub evaluations: usize,
    pub gradient_norm: f64,
    /// Hessian of the log-likelihood on the unconstrained scale, over the
    /// free parameters in layout order.
    pub hessian: Option<DMatrix<f64>>,
    /// Covariance on the unconstrained scale, same indexing as `hessian`.
    pub covariance: Option<DMatrix<f64>>,
    pub n_patients: usize,
    pub n_transitions: usize,
    pub floor_hits: u64,
    pub seed: Option<u64>,
    pub elapsed: Duration,
}

impl FitResult {
    pub fn estimate(&self, key: &str) -> Option<&ParamEstimate> {
        self.estimates.iter().find(|e| e.key == key)
    }
}

/// Natural-scale estimate, delta-method SE and interval for a parameter
/// stored as `theta` with unconstrained standard error `se`. Intervals for
/// transformed parameters are mapped back from the unconstrained scale so
/// they stay inside the parameter's range.
pub fn natural_estimate(transform: Transform, theta: f64, se: f64) -> (f64, f64, f64, f64) {
    let est = transform.forward(theta);
    let se_nat = transform.derivative(theta).abs() * se;
    match wald_interval(theta, se) {
        Some((lo, hi)) if transform == Transform::Identity => (est, se_nat, lo, hi),
        Some((lo, hi)) => (est, se_nat, transform.forward(lo), transform.forward(hi)),
        None => (est, f64::NAN, f64::NAN, f64::NAN),
    }
}

/// Reported estimates for `params` given unconstrained standard errors.
pub fn build_estimates(spec: &ModelSpec, params: &Params, se: &[f64]) -> Vec<ParamEstimate> {
    layout(spec)
        .iter()
        .zip(params.to_vec())
        .zip(se)
        .map(|((info, theta), &s)| {
            let (estimate, se, lower, upper) = natural_estimate(info.transform, theta, s);
            ParamEstimate {
                key: info.key(),
                group: info.group.clone(),
                name: info.name.clone(),
                estimate,
                se,
                lower,
                upper,
            }
        })
        .collect()
}

/// Transition counts and exposure used for crude starting rates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CrudeRates {
    pub activation: f64,
    pub deactivation: f64,
    /// Undamaged to damaged, pooled over activity.
    pub damage_from_inactive: f64,
    pub damage_from_active: f64,
}

const FALLBACK_RATE: f64 = 0.1;

/// Counts over exposure for each source status, from consecutive visits in
/// the likelihood intervals; 0.1 where a transition type is never observed.
pub fn crude_rates(dataset: &PanelDataset) -> CrudeRates {
    let mut counts = [0.0; 4];
    let mut exposure = [0.0; 4];
    for p in dataset.patients() {
        for a in 1..p.visits.len().saturating_sub(1) {
            let (v0, v1) = (&p.visits[a], &p.visits[a + 1]);
            let dt = v1.time - v0.time;
            for (s0, s1) in v0.joints.iter().zip(&v1.joints) {
                let (Some(s0), Some(s1)) = (s0, s1) else { continue };
                if s0.damaged {
                    continue;
                }
                let (slot, moved) = if s0.active {
                    (1, !s1.active && !s1.damaged)
                } else {
                    (0, s1.active && !s1.damaged)
                };
                exposure[slot] += dt;
                counts[slot] += moved as u8 as f64;
                exposure[2 + slot] += dt;
                counts[2 + slot] += s1.damaged as u8 as f64;
            }
        }
    }
    let rate = |k: usize| {
        if counts[k] > 0.0 && exposure[k] > 0.0 {
            counts[k] / exposure[k]
        } else {
            FALLBACK_RATE
        }
    };
    CrudeRates {
        activation: rate(0),
        deactivation: rate(1),
        damage_from_inactive: rate(2),
        damage_from_active: rate(3),
    }
}

/// Starting values: crude baselines, zero coefficients, unit variances, no
/// correlation, loadings -0.2 and a 0.15 stayer fraction.
pub fn initial_values(dataset: &PanelDataset, spec: &ModelSpec) -> Params {
    let c = crude_rates(dataset);
    let re = RandomEffectsParams::from_natural(1.0, 1.0, 0.0);
    let logit_pi = (0.15_f64 / 0.85).ln();
    match spec.kind {
        ModelKind::SixState => {
            let mut p = SixStateParams::baseline(
                spec,
                [c.activation.ln(), c.deactivation.ln(), c.damage_from_inactive.ln()],
            );
            p.alpha = -0.2;
            p.random_effects = re;
            p.logit_pi = logit_pi;
            Params::Six(p)
        }
        ModelKind::FiveState => {
            let out1 = c.activation + c.damage_from_inactive;
            let out2 = c.deactivation + c.damage_from_active;
            let mut p = FiveStateParams::baseline(
                spec,
                [
                    -out1.ln(),
                    -out2.ln(),
                    (c.damage_from_inactive / c.activation).ln(),
                    (c.damage_from_active / c.deactivation).ln(),
                ],
            );
            p.alpha1 = -0.2;
            p.alpha2 = -0.2;
            p.random_effects = re;
            p.logit_pi = logit_pi;
            Params::Five(p)
        }
    }
}

/// Maximum likelihood fit of `spec` to `dataset`.
pub fn fit(dataset: &PanelDataset, spec: &ModelSpec, options: &FitOptions) -> Result<FitResult> {
    let started = Instant::now();
    let lik = Likelihood::new(dataset, spec)?;
    if lik.patients().is_empty() {
        return Err(Error::Initialization(
            "no patient has a usable interval (at least 3 visits needed)".into(),
        ));
    }
    let start = match &options.initial {
        Some(p) if p.kind() == spec.kind => p.clone(),
        Some(_) => return Err(Error::Config("initial values are for the other model".into())),
        None => initial_values(dataset, spec),
    };
    let full0 = start.to_vec();
    let keys: Vec<String> = layout(spec).iter().map(|i| i.key()).collect();
    for k in &options.fixed {
        if !keys.contains(k) {
            return Err(Error::Config(format!("cannot fix unknown parameter {k}")));
        }
    }
    let free: Vec<usize> = (0..keys.len()).filter(|&i| !options.fixed.contains(&keys[i])).collect();
    let embed = |x: &[f64]| {
        let mut full = full0.clone();
        for (&i, &v) in free.iter().zip(x) {
            full[i] = v;
        }
        full
    };
    let theta0: Vec<f64> = free.iter().map(|&i| full0[i]).collect();
    let floor_before = floor_hits();
    let mut objective = |theta: &[f64]| -> f64 {
        match Params::from_vec(spec, &embed(theta)).and_then(|p| lik.loglik(&p)) {
            Ok(v) => v,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let l0 = objective(&theta0);
    if !l0.is_finite() {
        return Err(Error::Initialization(format!(
            "log-likelihood at the initial values is {l0}"
        )));
    }
    info!(
        "fitting {} model ({}, {} quadrature points) to {} patients, {} transitions; initial log-likelihood {l0:.4}",
        spec.kind,
        spec.random_effects,
        spec.quadrature_points,
        lik.patients().len(),
        lik.n_transitions()
    );
    let out = bfgs_maximize(&mut objective, &theta0, &options.optimizer);
    if !out.converged {
        warn!("optimizer stopped without convergence: {}", out.message);
    }
    let params = Params::from_vec(spec, &embed(&out.theta))?;
    let log_likelihood = lik.loglik(&params)?;
    let mut se = vec![f64::NAN; keys.len()];
    let (hessian, covariance) = if options.standard_errors && !free.is_empty() {
        let h = numerical_hessian(&mut objective, &out.theta);
        let cov = covariance_from_hessian(&h);
        for (&i, s) in free.iter().zip(cov.standard_errors()) {
            se[i] = s;
        }
        (Some(h), Some(cov.matrix))
    } else {
        (None, None)
    };
    let estimates = build_estimates(spec, &params, &se);
    Ok(FitResult {
        spec: spec.clone(),
        params,
        estimates,
        log_likelihood,
        iterations: out.iterations,
        converged: out.converged,
        message: out.message,
        evaluations: out.evaluations,
        gradient_norm: out.gradient_norm,
        hessian,
        covariance,
        n_patients: lik.patients().len(),
        n_transitions: lik.n_transitions(),
        floor_hits: floor_hits() - floor_before,
        seed: None,
        elapsed: started.elapsed(),
    })
}
