//! Shared oracles and fixtures for the integration tests.
#![allow(dead_code)]

use clustered_msm::covariates::{PanelDataset, Patient, Visit, N_JOINTS};
use clustered_msm::kernels::four_state_row;
use clustered_msm::model::{observed_index, FourStateRates, JointStatus, Params, SixStateParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Intercept-only three-state intensities (inactive, active, damaged) with a
/// multiplicative sex effect per source state.
#[derive(Debug, Clone, Copy)]
pub struct ThreeStateTruth {
    pub l12: f64,
    pub l13: f64,
    pub l21: f64,
    pub l23: f64,
    /// log-multipliers of both exits from inactive / active for males
    pub sex_inactive: f64,
    pub sex_active: f64,
}

/// Independent panel generator for the three-state intensity model: every
/// joint runs its own chain by competing exponential clocks, observed at
/// visits spaced uniformly on [0.3, 1.5] years.
pub fn three_state_cohort(truth: &ThreeStateTruth, n: usize, seed: u64) -> PanelDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut patients = Vec::with_capacity(n);
    for i in 0..n {
        let sex = rng.gen_bool(0.5) as u8;
        let m1 = (truth.sex_inactive * sex as f64).exp();
        let m2 = (truth.sex_active * sex as f64).exp();
        let out = [
            (truth.l12 * m1, truth.l13 * m1),
            (truth.l21 * m2, truth.l23 * m2),
        ];
        let n_visits = rng.gen_range(6..=12);
        let mut times = vec![0.0];
        for _ in 1..n_visits {
            let last = *times.last().unwrap();
            times.push(last + rng.gen_range(0.3..1.5));
        }
        // state: 0 inactive, 1 active, 2 damaged
        let mut state = [0usize; N_JOINTS];
        let mut visits = Vec::with_capacity(n_visits);
        let mut now = 0.0;
        for &t in &times {
            for s in state.iter_mut() {
                let mut clock = now;
                while *s != 2 {
                    let (move_rate, damage_rate) = out[*s];
                    let total = move_rate + damage_rate;
                    clock += -rng.gen::<f64>().ln() / total;
                    if clock > t {
                        break;
                    }
                    *s = if rng.gen::<f64>() * total < damage_rate { 2 } else { 1 - *s };
                }
            }
            now = t;
            let statuses = state.map(|s| JointStatus::new(s == 1, s == 2));
            visits.push(Visit::complete(t, statuses));
        }
        patients.push(Patient {
            id: (i + 1).to_string(),
            sex,
            age_at_onset: 30.0,
            arthritis_duration_at_entry: 2.0,
            visits,
        });
    }
    PanelDataset::new(patients).unwrap()
}

/// Hand-built mover rates of an intercept-only six-state model.
pub fn mover_rates(p: &SixStateParams, u: f64, v: f64) -> FourStateRates {
    let l12 = (p.activation.log_baseline + u).exp();
    let l21 = (p.deactivation.log_baseline + p.alpha * u).exp();
    let l13 = (p.damage.log_baseline + v).exp();
    FourStateRates {
        l12,
        l13,
        l21,
        l24: l13 * p.active_damage.exp(),
        l34: l12 * p.damaged_activation.exp(),
        l43: l21 * p.damaged_deactivation.exp(),
    }
}

/// Observed (from, to) counts of each likelihood interval: every interval
/// but the first, joints recorded at both ends.
pub fn interval_counts(patient: &Patient) -> Vec<(f64, [[u32; 4]; 4])> {
    let v = &patient.visits;
    (1..v.len().saturating_sub(1))
        .map(|a| {
            let mut c = [[0u32; 4]; 4];
            for (s0, s1) in v[a].joints.iter().zip(&v[a + 1].joints) {
                if let (Some(s0), Some(s1)) = (s0, s1) {
                    c[observed_index(*s0)][observed_index(*s1)] += 1;
                }
            }
            (v[a + 1].time - v[a].time, c)
        })
        .collect()
}

/// Brute-force Monte Carlo estimate of the observation-level mover
/// log-likelihood of one patient under an intercept-only six-state model,
/// with `draws` fresh bivariate normal draws per interval. Returns the
/// estimate and its delta-method standard error.
pub fn monte_carlo_mover_loglik(patient: &Patient, params: &Params, draws: usize, seed: u64) -> (f64, f64) {
    let Params::Six(p) = params else { panic!("six-state parameters expected") };
    let re = p.random_effects;
    let (su, sv, rho) = (re.var_u().sqrt(), re.var_v().sqrt(), re.rho());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut var = 0.0;
    for (dt, counts) in interval_counts(patient) {
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..draws {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let u = su * z1;
            let v = sv * (rho * z1 + (1.0 - rho * rho).sqrt() * z2);
            let rates = mover_rates(p, u, v);
            let mut log_l = 0.0;
            for (from, row) in counts.iter().enumerate() {
                if row.iter().all(|&c| c == 0) {
                    continue;
                }
                let k = four_state_row(&rates, dt, from).unwrap();
                for (to, &c) in row.iter().enumerate() {
                    if c > 0 {
                        log_l += c as f64 * k[to].ln();
                    }
                }
            }
            let l = log_l.exp();
            sum += l;
            sum_sq += l * l;
        }
        let mean = sum / draws as f64;
        let sd = (sum_sq / draws as f64 - mean * mean).max(0.0).sqrt();
        total += mean.ln();
        var += (sd / (draws as f64).sqrt() / mean).powi(2);
    }
    (total, var.sqrt())
}

/// One patient with a single recorded joint (left MCP 1) following
/// `states` at `times`; all other joints unrecorded.
pub fn single_joint_patient(times: &[f64], states: &[JointStatus]) -> Patient {
    let visits = times
        .iter()
        .zip(states)
        .map(|(&t, &s)| {
            let mut v = Visit::new(t);
            v.joints[0] = Some(s);
            v
        })
        .collect();
    Patient {
        id: "1".into(),
        sex: 1,
        age_at_onset: 40.0,
        arthritis_duration_at_entry: 3.0,
        visits,
    }
}
