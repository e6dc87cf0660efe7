use clustered_msm::covariates::PanelDataset;
use clustered_msm::estimation::{
    bfgs_maximize, covariance_from_hessian, fit, numerical_hessian, parameter_table, parse_parameter_table,
    wald_interval, FitOptions, FitResult, OptimizerOptions,
};
use clustered_msm::likelihood::Likelihood;
use clustered_msm::model::{layout, ModelSpec, Params};
use clustered_msm::simulator::{simulate_cohort, SimConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn small_problem(n: usize, seed: u64) -> (PanelDataset, ModelSpec) {
    let mut cfg = SimConfig::six_state_default(n, seed);
    cfg.schedule.max_visits = 10;
    let data = simulate_cohort(&cfg).unwrap().dataset;
    (data, cfg.spec.with_quadrature(5))
}

fn small_fit() -> (PanelDataset, ModelSpec, FitResult) {
    let (data, spec) = small_problem(40, 31);
    let f = fit(&data, &spec, &FitOptions::default()).unwrap();
    (data, spec, f)
}

#[test]
fn bfgs_finds_the_rosenbrock_optimum() {
    let mut f = |x: &[f64]| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
    let start = [-1.2, 1.0];
    let out = bfgs_maximize(&mut f, &start, &OptimizerOptions::default());
    assert!(out.converged, "{}", out.message);
    assert!((out.theta[0] - 1.0).abs() < 1e-4 && (out.theta[1] - 1.0).abs() < 1e-4, "{:?}", out.theta);
    assert!(out.value >= f(&start));
}

#[test]
fn bfgs_iterates_never_decrease() {
    // the returned value is the best the optimizer has seen
    let mut seen = Vec::new();
    let mut f = |x: &[f64]| {
        let v = -(x[0] - 3.0).powi(4) - (x[1] + 1.0).powi(2) - 0.5 * x[0] * x[1];
        seen.push(v);
        v
    };
    let out = bfgs_maximize(&mut f, &[0.0, 0.0], &OptimizerOptions::default());
    assert!(out.value >= seen[0]);
    assert!(out.value >= seen.iter().copied().fold(f64::NEG_INFINITY, f64::max) - 1e-9);
}

#[test]
fn normal_mean_hessian_is_minus_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..250).map(|_| 2.0 + rng.sample::<f64, _>(StandardNormal)).collect();
    let mut ll = |m: &[f64]| xs.iter().map(|x| -0.5 * (x - m[0]).powi(2)).sum::<f64>();
    let h = numerical_hessian(&mut ll, &[2.1]);
    assert!((h[(0, 0)] + 250.0).abs() < 1e-4, "{}", h[(0, 0)]);
    let se = covariance_from_hessian(&h).standard_errors()[0];
    assert!((se - 250f64.sqrt().recip()).abs() < 1e-8);
    let (lo, hi) = wald_interval(2.0, se).unwrap();
    assert!((hi - lo - 2.0 * 1.96 * se).abs() < 1e-14);
    assert!(wald_interval(2.0, f64::NAN).is_none());
}

#[test]
fn standard_errors_follow_parameter_permutation() {
    let a = DMatrix::from_row_slice(3, 3, &[-4.0, 1.0, 0.5, 1.0, -3.0, 0.2, 0.5, 0.2, -2.0]);
    let perm = [2, 0, 1];
    let b = DMatrix::from_fn(3, 3, |i, j| a[(perm[i], perm[j])]);
    let (sa, sb) = (
        covariance_from_hessian(&a).standard_errors(),
        covariance_from_hessian(&b).standard_errors(),
    );
    for i in 0..3 {
        assert!((sb[i] - sa[perm[i]]).abs() < 1e-14);
    }
}

#[test]
fn fit_result_is_self_consistent() {
    let (data, spec, f) = small_fit();
    assert!(f.converged, "{}", f.message);
    let again = Likelihood::new(&data, &spec).unwrap().loglik(&f.params).unwrap();
    assert!((again - f.log_likelihood).abs() <= 1e-8);

    // refitting from the optimum gains nothing
    let warm = FitOptions { initial: Some(f.params.clone()), standard_errors: false, ..FitOptions::default() };
    let g = fit(&data, &spec, &warm).unwrap();
    // relative, like the optimizer's own stopping rule
    let gain = (g.log_likelihood - f.log_likelihood) / f.log_likelihood.abs();
    assert!(gain <= 1e-8, "{} -> {}", f.log_likelihood, g.log_likelihood);

    // the report round-trips at six decimals
    let parsed = parse_parameter_table(&parameter_table(&f)).unwrap();
    assert_eq!(parsed.len(), f.estimates.len());
    for (p, e) in parsed.iter().zip(&f.estimates) {
        assert_eq!(p.key, e.key);
        for (x, y) in [(p.estimate, e.estimate), (p.se, e.se), (p.lower, e.lower), (p.upper, e.upper)] {
            assert!((x.is_nan() && y.is_nan()) || (x - y).abs() <= 5e-7, "{}: {x} vs {y}", e.key);
        }
    }
    let h = f.hessian.as_ref().unwrap();
    assert_eq!(h.nrows(), f.estimates.len());
}

/// Activity-only data (damage switched off): with everything else held at
/// the truth, the two activity log-rates are recovered.
#[test]
fn activity_rates_recovered() {
    let mut cfg = SimConfig::six_state_default(150, 34);
    let Params::Six(p) = &mut cfg.truth else { unreachable!() };
    p.damage.log_baseline = -40.0;
    let data = simulate_cohort(&cfg).unwrap().dataset;
    let spec = cfg.spec.clone().with_quadrature(9);
    let keys: Vec<String> = layout(&spec).iter().map(|i| i.key()).collect();
    let mut start = cfg.truth.clone();
    let Params::Six(q) = &mut start else { unreachable!() };
    q.activation.log_baseline += 0.3;
    q.deactivation.log_baseline -= 0.3;
    let options = FitOptions {
        initial: Some(start),
        fixed: keys[2..].to_vec(),
        ..FitOptions::default()
    };
    let f = fit(&data, &spec, &options).unwrap();
    assert!(f.converged);
    let truth = cfg.truth.natural_values(&spec);
    for k in 0..2 {
        let e = &f.estimates[k];
        assert!((e.estimate - truth[k]).abs() <= 3.0 * e.se, "{}: {} vs {} (se {})", e.key, e.estimate, truth[k], e.se);
    }
}

#[test]
fn fixed_parameters_stay_put() {
    let (data, spec) = small_problem(25, 32);
    let options = FitOptions {
        fixed: vec!["rho".into(), "alpha".into()],
        ..FitOptions::default()
    };
    let start = clustered_msm::estimation::initial_values(&data, &spec);
    let f = fit(&data, &spec, &options).unwrap();
    assert_eq!(f.params.random_effects().rho(), start.random_effects().rho());
    let rho = f.estimate("rho").unwrap();
    assert!(rho.se.is_nan());
    assert_eq!(f.hessian.unwrap().nrows(), f.estimates.len() - 2);

    let bad = FitOptions { fixed: vec!["no_such_parameter".into()], ..FitOptions::default() };
    assert!(fit(&data, &spec, &bad).is_err());
}

#[test]
fn single_patient_fit_terminates() {
    let (data, spec) = small_problem(1, 33);
    let options = FitOptions {
        optimizer: OptimizerOptions { max_iterations: 200, ..OptimizerOptions::default() },
        ..FitOptions::default()
    };
    let f = fit(&data, &spec, &options).unwrap();
    assert!(f.log_likelihood.is_finite());
    assert!(f.iterations <= 200);
}

#[test]
fn empty_dataset_is_an_error() {
    let spec = SimConfig::six_state_default(1, 0).spec;
    assert!(fit(&PanelDataset::empty(), &spec, &FitOptions::default()).is_err());
}
