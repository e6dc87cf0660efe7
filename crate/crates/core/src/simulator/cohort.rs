use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal};
use rayon::prelude::*;

use super::config::SimConfig;
use crate::covariates::{DerivedCovariates, JointId, PanelDataset, Patient, Visit, N_JOINTS};
use crate::error::{Error, Result};
use crate::model::{
    five_state_sojourn_params, observed_index, six_state_intensities, sojourn_to_intensities,
    JointStatus, Params, RandomEffectsStructure,
};

/// A jump of one joint inside an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub joint: usize,
    pub time: f64,
    pub to: JointStatus,
}

/// Hidden quantities behind one simulated patient.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientTruth {
    pub id: String,
    pub stayer: bool,
    /// Random effects per interval (repeated under patient-level effects).
    pub effects: Vec<(f64, f64)>,
    /// Jumps per interval; empty unless paths were requested.
    pub paths: Vec<Vec<Jump>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCohort {
    pub dataset: PanelDataset,
    pub truth: Vec<PatientTruth>,
}

impl SimulatedCohort {
    /// Sidecar CSV: `patient_id,stayer,interval,u,v`.
    pub fn write_truth<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["patient_id", "stayer", "interval", "u", "v"])?;
        for t in &self.truth {
            for (j, (u, v)) in t.effects.iter().enumerate() {
                w.write_record([
                    t.id.clone(),
                    (t.stayer as u8).to_string(),
                    (j + 1).to_string(),
                    format!("{u}"),
                    format!("{v}"),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<truth writer>", e))?;
        Ok(())
    }

    pub fn write_truth_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_truth(std::io::BufWriter::new(file))
    }

    pub fn stayer_count(&self) -> usize {
        self.truth.iter().filter(|t| t.stayer).count()
    }
}

/// Generator for patient `index`: the configured seed with the patient's
/// own stream.
pub fn patient_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Simulate a cohort. Patients are independent given their own random
/// stream, so the output depends only on the configuration.
pub fn simulate_cohort(config: &SimConfig) -> Result<SimulatedCohort> {
    config.validate()?;
    let results: Vec<(Patient, PatientTruth)> = (0..config.n_patients)
        .into_par_iter()
        .map(|i| simulate_patient(config, i))
        .collect::<Result<_>>()?;
    let (patients, truth): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let dataset = PanelDataset::new(patients)?;
    let mut truth = truth;
    truth.sort_by(|a, b| crate::covariates::compare_ids(&a.id, &b.id));
    Ok(SimulatedCohort { dataset, truth })
}

/// Out-rates of the generating chain for one joint, as (destination, rate).
type Moves = Vec<(JointStatus, f64)>;

fn moves(truth: &Params, z: &[&[f64]], u: f64, v: f64, stayer: bool, s: JointStatus) -> Result<Moves> {
    let flip = JointStatus::new(!s.active, s.damaged);
    Ok(match truth {
        Params::Six(p) => {
            let r = six_state_intensities(z, u, v, p)?;
            if stayer {
                let rate = if s.active { r.stayer.backward } else { r.stayer.forward };
                vec![(flip, rate)]
            } else {
                let m = r.mover;
                match (s.active, s.damaged) {
                    (false, false) => vec![(flip, m.l12), (JointStatus::new(false, true), m.l13)],
                    (true, false) => vec![(flip, m.l21), (JointStatus::new(true, true), m.l24)],
                    (false, true) => vec![(flip, m.l34)],
                    (true, true) => vec![(flip, m.l43)],
                }
            }
        }
        Params::Five(p) => {
            let r = sojourn_to_intensities(&five_state_sojourn_params(z, u, v, p)?)?;
            if stayer {
                let rate = if s.active { r.stayer.backward } else { r.stayer.forward };
                vec![(flip, rate)]
            } else if s.damaged {
                Vec::new()
            } else if s.active {
                vec![(flip, r.mover.l21), (JointStatus::new(true, true), r.mover.l23)]
            } else {
                vec![(flip, r.mover.l12), (JointStatus::new(false, true), r.mover.l13)]
            }
        }
    })
}

/// Competing exponential clocks from `state` over `[0, dt]`.
fn evolve(
    rng: &mut ChaCha8Rng,
    mut state: JointStatus,
    dt: f64,
    rates: &dyn Fn(JointStatus) -> Result<Moves>,
    mut on_jump: impl FnMut(f64, JointStatus),
) -> Result<JointStatus> {
    let mut t = 0.0;
    loop {
        let out = rates(state)?;
        let total: f64 = out.iter().map(|(_, r)| r).sum();
        if !(total > 0.0) {
            return Ok(state);
        }
        let e: f64 = rng.gen::<f64>();
        t += -(1.0 - e).ln() / total;
        if t > dt {
            return Ok(state);
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut next = out[out.len() - 1].0;
        for (s, r) in &out {
            if pick < *r {
                next = *s;
                break;
            }
            pick -= r;
        }
        state = next;
        on_jump(t, state);
    }
}

fn simulate_patient(config: &SimConfig, index: usize) -> Result<(Patient, PatientTruth)> {
    let mut rng = patient_rng(config.seed, index);
    let sched = &config.schedule;
    let gen = &config.covariates;
    let bad = |e: rand_distr::NormalError| Error::Config(e.to_string());

    let n_visits = rng.gen_range(sched.min_visits..=sched.max_visits);
    let gap = LogNormal::new(sched.median_gap.ln(), sched.gap_log_sd).map_err(bad)?;
    let mut times = vec![0.0];
    for _ in 1..n_visits {
        let g = gap.sample(&mut rng).clamp(sched.min_gap, sched.max_gap);
        times.push(times[times.len() - 1] + g);
    }
    let sex = rng.gen_bool(gen.male_fraction) as u8;
    let age = Normal::new(gen.age_onset_mean, gen.age_onset_sd)
        .map_err(bad)?
        .sample(&mut rng)
        .clamp(1.0, 90.0);
    let shape = (gen.duration_mean / gen.duration_sd).powi(2);
    let duration = Gamma::new(shape, gen.duration_mean / shape)
        .map_err(|e| Error::Config(e.to_string()))?
        .sample(&mut rng);
    let stayer = rng.gen_bool(config.truth.pi().clamp(0.0, 1.0));

    let re = config.truth.random_effects();
    let (su, sv, rho) = (re.var_u().sqrt(), re.var_v().sqrt(), re.rho());
    let draw = |rng: &mut ChaCha8Rng| {
        let a: f64 = rng.sample(rand_distr::StandardNormal);
        let b: f64 = rng.sample(rand_distr::StandardNormal);
        (su * a, sv * (rho * a + (1.0 - rho * rho).max(0.0).sqrt() * b))
    };
    let patient_effect = draw(&mut rng);

    let start: [JointStatus; N_JOINTS] = std::array::from_fn(|_| {
        JointStatus::new(rng.gen_bool(config.initial_active_probability), false)
    });
    let mut patient = Patient {
        id: (index + 1).to_string(),
        sex,
        age_at_onset: age,
        arthritis_duration_at_entry: duration,
        visits: vec![Visit::complete(times[0], start)],
    };
    let mut truth = PatientTruth {
        id: patient.id.clone(),
        stayer,
        effects: Vec::new(),
        paths: Vec::new(),
    };
    let spec = &config.spec;
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); spec.covariates.len()];
    for a in 0..n_visits - 1 {
        let (u, v) = match spec.random_effects {
            RandomEffectsStructure::ObservationLevel => draw(&mut rng),
            RandomEffectsStructure::PatientLevel => patient_effect,
        };
        truth.effects.push((u, v));
        let mut derived = DerivedCovariates::for_patient(&patient);
        if a == 0 {
            // no history yet: use the activity observed at entry
            for l in 0..N_JOINTS {
                derived.ama[0][l] = patient.visits[0].joints[l].map(|s| s.active as u8 as f64);
            }
        }
        let dt = times[a + 1] - times[a];
        let mut next = [JointStatus::default(); N_JOINTS];
        let mut jumps = Vec::new();
        for l in 0..N_JOINTS {
            let joint = JointId::from_index(l);
            for (r, kinds) in spec.covariates.iter().enumerate() {
                rows[r].clear();
                derived.write_row(&patient, a, joint, kinds, spec.time_updated_duration, &mut rows[r]);
            }
            let z: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let from = patient.visits[a].joints[l].expect("simulated visits are complete");
            let rates = |s: JointStatus| moves(&config.truth, &z, u, v, stayer, s);
            next[l] = evolve(&mut rng, from, dt, &rates, |t, s| {
                if config.record_paths {
                    jumps.push(Jump { joint: l, time: times[a] + t, to: s });
                }
            })?;
        }
        patient.visits.push(Visit::complete(times[a + 1], next));
        if config.record_paths {
            truth.paths.push(jumps);
        }
    }
    Ok((patient, truth))
}

/// Counts of consecutive-visit state pairs pooled over joints and patients,
/// indexed by `observed_index` (inactive/undamaged, active/undamaged,
/// inactive/damaged, active/damaged).
pub fn empirical_transition_table(dataset: &PanelDataset) -> [[u64; 4]; 4] {
    let mut out = [[0u64; 4]; 4];
    for p in dataset.patients() {
        for w in p.visits.windows(2) {
            for (a, b) in w[0].joints.iter().zip(&w[1].joints) {
                if let (Some(a), Some(b)) = (a, b) {
                    out[observed_index(*a)][observed_index(*b)] += 1;
                }
            }
        }
    }
    out
}

/// End state of one joint after `dt` from `from` with fixed rates; used to
/// check path sampling against the kernels.
pub fn sample_interval_end(
    rng: &mut ChaCha8Rng,
    params: &Params,
    z: &[&[f64]],
    u: f64,
    v: f64,
    stayer: bool,
    from: JointStatus,
    dt: f64,
) -> Result<JointStatus> {
    evolve(rng, from, dt, &|s| moves(params, z, u, v, stayer, s), |_, _| {})
}
