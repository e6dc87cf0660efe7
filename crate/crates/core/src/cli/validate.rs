use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covariates::PanelDataset;
use crate::error::Result;
use crate::kernels::{
    expm_oracle, four_state_tpm, three_state_tpm, two_state_tpm, TransitionKernel,
};
use crate::likelihood::{
    bivariate_integrate, gauss_hermite_rule, interval_block, patient_conditional_loglik, Likelihood,
};
use crate::model::{FourStateRates, Hypothesis, RandomEffectsParams, ThreeStateRates, TwoStateRates};
use crate::simulator::{simulate_cohort, SimConfig};

/// Deliberate defects for checking that the harness catches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Negate the closed-form p12 of the four-state kernel before comparing.
    P12Sign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<34} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(out, "{} checks, {failed} failed", self.checks.len());
        out
    }
}

pub const KERNEL_TOLERANCE: f64 = 1e-10;
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
pub const SEMIGROUP_TOLERANCE: f64 = 1e-10;
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
const RATE_RANGE: (f64, f64) = (1e-4, 10.0);

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Random four-state rates and elapsed time: rates log-uniform on
/// [1e-4, 10], time on [0.01, 20].
pub fn random_four(rng: &mut ChaCha8Rng) -> (FourStateRates, f64) {
    let mut r = || log_uniform(rng, RATE_RANGE.0, RATE_RANGE.1);
    let rates = FourStateRates {
        l12: r(),
        l13: r(),
        l21: r(),
        l24: r(),
        l34: r(),
        l43: r(),
    };
    (rates, log_uniform(rng, 0.01, 20.0))
}

pub fn random_three(rng: &mut ChaCha8Rng) -> (ThreeStateRates, f64) {
    let mut r = || log_uniform(rng, RATE_RANGE.0, RATE_RANGE.1);
    let rates = ThreeStateRates {
        l12: r(),
        l13: r(),
        l21: r(),
        l23: r(),
    };
    (rates, log_uniform(rng, 0.01, 20.0))
}

struct Worst {
    value: f64,
    inputs: String,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            inputs: String::new(),
        }
    }

    fn update(&mut self, value: f64, inputs: impl FnOnce() -> String) {
        if !(value <= self.value) {
            self.value = value;
            self.inputs = inputs();
        }
    }
}

/// Closed-form four-state kernel with an optional injected fault.
fn four_closed(r: &FourStateRates, t: f64, fault: Option<Fault>) -> Result<TransitionKernel> {
    let k = four_state_tpm(r, t)?;
    if fault == Some(Fault::P12Sign) {
        let mut e: Vec<f64> = k.rows().flat_map(|row| row.to_vec()).collect();
        e[1] = -e[1];
        return Ok(TransitionKernel::unchecked(4, e, t));
    }
    Ok(k)
}

/// Kernels against the matrix-exponential oracle, row sums, the argument
/// symmetry of the four-state kernel and Chapman-Kolmogorov.
pub fn kernel_checks(report: &mut ValidationReport, grid: usize, seed: u64, fault: Option<Fault>) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut w4, mut w3, mut w2) = (Worst::new(), Worst::new(), Worst::new());
    let mut rows = Worst::new();
    let mut sym = Worst::new();
    for _ in 0..grid {
        let (r, t) = random_four(&mut rng);
        let closed = four_closed(&r, t, fault)?;
        let oracle = expm_oracle(&r.generator(), t)?;
        w4.update(closed.max_abs_diff(&oracle), || format!("rates {:?}, t = {t}", r.as_array()));
        rows.update(closed.max_row_sum_error(), || format!("four-state rates {:?}, t = {t}", r.as_array()));
        // row 2 of P(Q) is row 1 of P(Q') with the states relabelled 2,1,4,3
        let swapped = expm_oracle(&r.swapped().generator(), t)?;
        let s = swapped.row(0);
        let perm = [s[1], s[0], s[3], s[2]];
        let d = perm
            .iter()
            .zip(oracle.row(1))
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        sym.update(d, || format!("rates {:?}, t = {t}", r.as_array()));

        let (q, t3) = random_three(&mut rng);
        let c3 = three_state_tpm(&q, t3)?;
        let o3 = expm_oracle(&q.generator(), t3)?;
        w3.update(c3.max_abs_diff(&o3), || format!("rates {q:?}, t = {t3}"));
        rows.update(c3.max_row_sum_error(), || format!("three-state rates {q:?}, t = {t3}"));

        let (a, b) = (log_uniform(&mut rng, RATE_RANGE.0, RATE_RANGE.1), log_uniform(&mut rng, RATE_RANGE.0, RATE_RANGE.1));
        let t2 = log_uniform(&mut rng, 0.01, 20.0);
        let c2 = two_state_tpm(a, b, t2)?;
        let o2 = expm_oracle(&TwoStateRates { forward: a, backward: b }.generator(), t2)?;
        w2.update(c2.max_abs_diff(&o2), || format!("rates ({a}, {b}), t = {t2}"));
        rows.update(c2.max_row_sum_error(), || format!("two-state rates ({a}, {b}), t = {t2}"));
    }
    for (name, w, tol) in [
        ("four-state kernel vs oracle", &w4, KERNEL_TOLERANCE),
        ("three-state kernel vs oracle", &w3, KERNEL_TOLERANCE),
        ("two-state kernel vs oracle", &w2, KERNEL_TOLERANCE),
        ("kernel row sums", &rows, ROW_SUM_TOLERANCE),
        ("four-state argument symmetry", &sym, SYMMETRY_TOLERANCE),
    ] {
        let passed = w.value <= tol;
        let mut detail = format!("max abs diff {:.3e} over {grid} draws (tol {tol:e})", w.value);
        if !passed {
            let _ = write!(detail, "; worst at {}", w.inputs);
        }
        report.push(name, passed, detail);
    }

    let mut ck = Worst::new();
    for _ in 0..grid {
        let (r, s) = random_four(&mut rng);
        let t = log_uniform(&mut rng, 0.01, 20.0);
        let lhs = four_closed(&r, s + t, fault)?;
        let rhs = four_closed(&r, s, fault)?.compose(&four_closed(&r, t, fault)?);
        ck.update(lhs.max_abs_diff(&rhs), || format!("four-state rates {:?}, s = {s}, t = {t}", r.as_array()));
        let (q, s3) = random_three(&mut rng);
        let lhs = three_state_tpm(&q, s3 + t)?;
        let rhs = three_state_tpm(&q, s3)?.compose(&three_state_tpm(&q, t)?);
        ck.update(lhs.max_abs_diff(&rhs), || format!("three-state rates {q:?}, s = {s3}, t = {t}"));
    }
    let passed = ck.value <= SEMIGROUP_TOLERANCE;
    let mut detail = format!("max abs diff {:.3e} over {grid} draws", ck.value);
    if !passed {
        let _ = write!(detail, "; worst at {}", ck.inputs);
    }
    report.push("Chapman-Kolmogorov", passed, detail);
    Ok(())
}

pub fn quadrature_checks(report: &mut ValidationReport) -> Result<()> {
    let rule = gauss_hermite_rule(15)?;
    let second = rule.integrate(|x| x * x);
    report.push(
        "quadrature second moment",
        (second - 1.0).abs() < 1e-12,
        format!("E[X^2] = {second:.15}"),
    );
    let mut worst: f64 = 0.0;
    for s2 in [0.5_f64, 1.0, 2.07] {
        let got = rule.integrate(|x| (s2.sqrt() * x).exp());
        worst = worst.max((got - (s2 / 2.0).exp()).abs());
    }
    report.push(
        "quadrature lognormal means",
        worst < 1e-4,
        format!("max abs error {worst:.3e} for variances 0.5, 1, 2.07"),
    );
    let re = RandomEffectsParams::from_natural(1.0, 1.0, 0.5);
    let got = bivariate_integrate(|u, v| (u + v).exp(), &re, &rule);
    report.push(
        "bivariate lognormal mean",
        (got - 1.5_f64.exp()).abs() < 1e-4,
        format!("{got:.6} vs {:.6}", 1.5_f64.exp()),
    );
    Ok(())
}

/// Likelihood identities on a small simulated cohort.
pub fn likelihood_checks(report: &mut ValidationReport, seed: u64) -> Result<()> {
    let mut cfg = SimConfig::six_state_default(12, seed);
    cfg.spec = cfg.spec.with_quadrature(7);
    let cohort = simulate_cohort(&cfg)?;
    let spec = &cfg.spec;
    let lik = Likelihood::new(&cohort.dataset, spec)?;
    let base = lik.loglik(&cfg.truth)?;

    let doubled = Likelihood::new(&cohort.dataset.duplicated(), spec)?.loglik(&cfg.truth)?;
    report.push(
        "likelihood additivity",
        doubled == 2.0 * base,
        format!("duplicated {doubled} vs 2 x {base}"),
    );

    let mut reversed: Vec<_> = cohort.dataset.patients().to_vec();
    reversed.reverse();
    let permuted = Likelihood::new(&PanelDataset::new(reversed)?, spec)?.loglik(&cfg.truth)?;
    report.push(
        "likelihood permutation invariance",
        permuted.to_bits() == base.to_bits(),
        format!("{permuted} vs {base}"),
    );

    let mut no_stayers = cfg.truth.clone();
    no_stayers.set_logit_pi(f64::NEG_INFINITY);
    let collapsed = lik.loglik(&no_stayers)?;
    let movers: f64 = lik
        .patients()
        .iter()
        .map(|p| lik.conditional(p, Hypothesis::Mover, &no_stayers))
        .sum::<Result<f64>>()?;
    report.push(
        "mixture collapse at pi = 0",
        (collapsed - movers).abs() <= 1e-12 * movers.abs(),
        format!("{collapsed} vs {movers}"),
    );

    // the gap to the fixed-effects value is about var/2 * (l'' + l'^2) per
    // interval, and l' sums over 28 joints, so the variance has to be tiny
    let var = 1e-12;
    let mut fixed = no_stayers.clone();
    *fixed.random_effects_mut() = RandomEffectsParams::from_natural(var, var, 0.0);
    let rule = gauss_hermite_rule(spec.quadrature_points)?;
    let mut worst: f64 = 0.0;
    for p in cohort.dataset.patients() {
        let got = patient_conditional_loglik(p, Hypothesis::Mover, &fixed, spec, &rule)?;
        let mut manual = 0.0;
        for a in 1..p.visits.len().saturating_sub(1) {
            manual += interval_block(p, a, Hypothesis::Mover, 0.0, 0.0, &fixed, spec)?.ln();
        }
        worst = worst.max((got - manual).abs());
    }
    report.push(
        "fixed-effects collapse",
        worst < 1e-8,
        format!("max per-patient diff {worst:.3e} (variances {var:e})"),
    );
    Ok(())
}

/// Run every check.
pub fn run_validation(grid: usize, seed: u64, fault: Option<Fault>) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    kernel_checks(&mut report, grid, seed, fault)?;
    quadrature_checks(&mut report)?;
    likelihood_checks(&mut report, seed)?;
    Ok(report)
}
