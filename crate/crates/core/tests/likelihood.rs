mod common;

use clustered_msm::covariates::{JointId, PanelDataset, Patient};
use clustered_msm::kernels::two_state_row;
use clustered_msm::likelihood::{
    gauss_hermite_rule, interval_block, patient_conditional_loglik, BivariateGrid, Likelihood,
};
use clustered_msm::model::{
    Hypothesis, ModelKind, ModelSpec, Params, RandomEffectsParams, RandomEffectsStructure, SixStateParams,
};
use clustered_msm::simulator::{simulate_cohort, SimConfig};
use common::{interval_counts, mover_rates};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn intercept_params(spec: &ModelSpec) -> SixStateParams {
    let mut p = SixStateParams::baseline(spec, [(0.4f64).ln(), (1.1f64).ln(), (0.05f64).ln()]);
    p.damaged_activation = -0.3;
    p.damaged_deactivation = 0.2;
    p.active_damage = 0.6;
    p.stayer_activation = -0.5;
    p.stayer_deactivation = 0.4;
    p.alpha = -0.5;
    p.random_effects = RandomEffectsParams::from_natural(0.8, 1.2, 0.3);
    p.logit_pi = (0.2f64 / 0.8).ln();
    p
}

fn cohort(n: usize, seed: u64) -> PanelDataset {
    let mut cfg = SimConfig::six_state_default(n, seed);
    cfg.schedule.max_visits = 8;
    simulate_cohort(&cfg).unwrap().dataset
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn interval_block_is_the_hand_product() {
    let spec = ModelSpec::without_covariates(ModelKind::SixState);
    let p = intercept_params(&spec);
    let params = Params::Six(p.clone());
    let data = cohort(6, 11);
    for patient in data.patients() {
        for (a, (dt, counts)) in interval_counts(patient).into_iter().enumerate() {
            for (u, v) in [(0.0, 0.0), (0.7, -1.1), (-1.3, 0.4)] {
                let rates = mover_rates(&p, u, v);
                let mut expected = 1.0;
                for (from, row) in counts.iter().enumerate() {
                    let k = clustered_msm::kernels::four_state_row(&rates, dt, from).unwrap();
                    for (to, &c) in row.iter().enumerate() {
                        expected *= k[to].powi(c as i32);
                    }
                }
                let got = interval_block(patient, a + 1, Hypothesis::Mover, u, v, &params, &spec).unwrap();
                assert!(close(got, expected, 1e-12), "{got} vs {expected}");

                let undamaged: u32 = counts[..2].iter().flat_map(|r| r[2..].iter()).sum();
                let damaged_start: u32 = counts[2..].iter().flatten().sum();
                let stayer = interval_block(patient, a + 1, Hypothesis::Stayer, u, v, &params, &spec).unwrap();
                if undamaged + damaged_start > 0 {
                    assert_eq!(stayer, 0.0);
                } else {
                    let fwd = rates.l12 * p.stayer_activation.exp();
                    let back = rates.l21 * p.stayer_deactivation.exp();
                    let mut expected = 1.0;
                    for from in 0..2 {
                        let k = two_state_row(fwd, back, dt, from);
                        for to in 0..2 {
                            expected *= k[to].powi(counts[from][to] as i32);
                        }
                    }
                    assert!(close(stayer, expected, 1e-12), "{stayer} vs {expected}");
                }
            }
        }
    }
}

/// Both random-effect structures against sums of interval blocks on the
/// same bivariate grid: per-interval integrals versus one integral of the
/// product.
#[test]
fn integral_placement() {
    let spec = ModelSpec::without_covariates(ModelKind::SixState).with_quadrature(7);
    let params = Params::Six(intercept_params(&spec));
    let rule = gauss_hermite_rule(7).unwrap();
    let grid = BivariateGrid::from_params(&rule, params.random_effects());
    let patient_spec = spec.clone().with_random_effects(RandomEffectsStructure::PatientLevel);
    for patient in cohort(4, 12).patients() {
        let intervals = 1..patient.visits.len() - 1;
        let blocks: Vec<Vec<f64>> = intervals
            .map(|a| {
                (0..grid.len())
                    .map(|i| interval_block(patient, a, Hypothesis::Mover, grid.u[i / grid.n], grid.v[i], &params, &spec).unwrap())
                    .collect()
            })
            .collect();
        let obs: f64 = blocks
            .iter()
            .map(|b| b.iter().zip(&grid.weights).map(|(x, w)| x * w).sum::<f64>().ln())
            .sum();
        let pat = (0..grid.len())
            .map(|i| grid.weights[i] * blocks.iter().map(|b| b[i]).product::<f64>())
            .sum::<f64>()
            .ln();
        let got_obs = patient_conditional_loglik(patient, Hypothesis::Mover, &params, &spec, &rule).unwrap();
        let got_pat = patient_conditional_loglik(patient, Hypothesis::Mover, &params, &patient_spec, &rule).unwrap();
        assert!(close(got_obs, obs, 1e-10), "{got_obs} vs {obs}");
        assert!(close(got_pat, pat, 1e-10), "{got_pat} vs {pat}");
    }
}

#[test]
fn mixture_identity_and_bounds() {
    let cfg = SimConfig::six_state_default(40, 13);
    let data = simulate_cohort(&cfg).unwrap().dataset;
    let spec = cfg.spec.clone().with_quadrature(7);
    let lik = Likelihood::new(&data, &spec).unwrap();
    let pi = cfg.truth.pi();
    let marginals = lik.patient_logliks(&cfg.truth).unwrap();
    let mut seen_stayer_branch = false;
    for (cp, &l) in lik.patients().iter().zip(&marginals) {
        let m = lik.conditional(cp, Hypothesis::Mover, &cfg.truth).unwrap();
        let s = lik.conditional(cp, Hypothesis::Stayer, &cfg.truth).unwrap();
        let mover_part = (1.0 - pi).ln() + m;
        if cp.known_mover {
            assert_eq!(s, f64::NEG_INFINITY);
            assert!(close(l, mover_part, 1e-13));
        } else {
            seen_stayer_branch |= s.is_finite();
            let direct = ((1.0 - pi) * m.exp() + pi * s.exp()).ln();
            assert!(close(l, direct, 1e-12), "{l} vs {direct}");
            assert!(l >= mover_part - 1e-12);
            assert!(l <= (mover_part.exp() + pi * s.exp()).ln() + 1e-12);
        }
    }
    assert!(seen_stayer_branch);
}

#[test]
fn zero_pi_is_the_pure_mover_model() {
    let cfg = SimConfig::six_state_default(30, 14);
    let data = simulate_cohort(&cfg).unwrap().dataset;
    let spec = cfg.spec.clone().with_quadrature(7);
    let mut truth = cfg.truth.clone();
    truth.set_logit_pi(f64::NEG_INFINITY);
    let lik = Likelihood::new(&data, &spec).unwrap();
    let total = lik.loglik(&truth).unwrap();
    let movers: f64 = lik
        .patients()
        .iter()
        .map(|cp| lik.conditional(cp, Hypothesis::Mover, &truth).unwrap())
        .sum();
    assert!(close(total, movers, 1e-12), "{total} vs {movers}");
}

fn relabel(patient: &Patient, perm: &[usize]) -> Patient {
    let mut p = patient.clone();
    for (v, orig) in p.visits.iter_mut().zip(&patient.visits) {
        for (l, &to) in perm.iter().enumerate() {
            v.joints[to] = orig.joints[l];
        }
    }
    p
}

#[test]
fn joint_relabeling_invariance() {
    let data = cohort(25, 15);
    // without joint-specific covariates any permutation is harmless
    let plain = ModelSpec::without_covariates(ModelKind::SixState).with_quadrature(9);
    let params = Params::Six(intercept_params(&plain));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut perm: Vec<usize> = (0..28).collect();
    perm.shuffle(&mut rng);
    let shuffled = PanelDataset::new(data.patients().iter().map(|p| relabel(p, &perm)).collect()).unwrap();
    let a = Likelihood::new(&data, &plain).unwrap().loglik(&params).unwrap();
    let b = Likelihood::new(&shuffled, &plain).unwrap().loglik(&params).unwrap();
    assert!(close(a, b, 1e-12), "{a} vs {b}");

    // with the full covariate set, swapping hands preserves joint type and
    // the contralateral indicator
    let cfg = SimConfig::six_state_default(1, 0);
    let spec = cfg.spec.clone().with_quadrature(9);
    let mirror: Vec<usize> = JointId::all().iter().map(|j| j.opposite().index()).collect();
    let mirrored = PanelDataset::new(data.patients().iter().map(|p| relabel(p, &mirror)).collect()).unwrap();
    let a = Likelihood::new(&data, &spec).unwrap().loglik(&cfg.truth).unwrap();
    let b = Likelihood::new(&mirrored, &spec).unwrap().loglik(&cfg.truth).unwrap();
    assert!(close(a, b, 1e-12), "{a} vs {b}");
}

#[test]
fn one_interval_structures_coincide() {
    let cfg = SimConfig::six_state_default(20, 16);
    let mut patients = simulate_cohort(&cfg).unwrap().dataset.patients().to_vec();
    for p in &mut patients {
        p.visits.truncate(3);
    }
    let data = PanelDataset::new(patients).unwrap();
    let obs = cfg.spec.clone().with_quadrature(11);
    let pat = obs
        .clone()
        .with_random_effects(RandomEffectsStructure::PatientLevel)
        .with_quadrature(11);
    let a = Likelihood::new(&data, &obs).unwrap().patient_logliks(&cfg.truth).unwrap();
    let b = Likelihood::new(&data, &pat).unwrap().patient_logliks(&cfg.truth).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(close(*x, *y, 1e-12), "{x} vs {y}");
    }
}

#[test]
fn quadrature_converges() {
    let cfg = SimConfig::six_state_default(40, 17);
    let data = simulate_cohort(&cfg).unwrap().dataset;
    let ll: Vec<f64> = [15, 30, 60]
        .iter()
        .map(|&n| {
            let spec = cfg.spec.clone().with_quadrature(n);
            Likelihood::new(&data, &spec).unwrap().loglik(&cfg.truth).unwrap()
        })
        .collect();
    let (d1, d2) = ((ll[1] - ll[0]).abs(), (ll[2] - ll[1]).abs());
    assert!(d2 < d1, "{ll:?}");
}

#[test]
fn patients_without_usable_intervals_contribute_zero() {
    let cfg = SimConfig::six_state_default(5, 18);
    let mut patients = simulate_cohort(&cfg).unwrap().dataset.patients().to_vec();
    patients[0].visits.truncate(2);
    let data = PanelDataset::new(patients).unwrap();
    let spec = cfg.spec.clone().with_quadrature(7);
    let lik = Likelihood::new(&data, &spec).unwrap();
    let per = lik.patient_logliks(&cfg.truth).unwrap();
    let rule = gauss_hermite_rule(7).unwrap();
    let direct = clustered_msm::likelihood::patient_marginal_loglik(data.patient(0), &cfg.truth, &spec, &rule).unwrap();
    assert_eq!(direct, 0.0);
    assert!(per.iter().all(|x| x.is_finite()));
}
