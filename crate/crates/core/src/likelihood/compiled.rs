use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use log::warn;
use rayon::prelude::*;

use super::quadrature::{gauss_hermite_rule, log_sum_exp, BivariateGrid, QuadratureRule};
use crate::covariates::{DerivedCovariates, JointId, PanelDataset, Patient, N_JOINTS};
use crate::error::{Error, Result};
use crate::kernels::{four_state_row, three_state_row, two_state_row};
use crate::model::{
    logistic, observed_index, FiveStateParams, Hypothesis, ModelSpec, Params,
    RandomEffectsStructure, SixStateLinks, SixStateParams,
};

static FLOOR_HITS: AtomicU64 = AtomicU64::new(0);

/// Number of kernel entries raised to the smallest positive normal `f64`
/// before taking logs, since process start.
pub fn floor_hits() -> u64 {
    FLOOR_HITS.load(Ordering::Relaxed)
}

/// Transitions of one interval that share a starting state and covariates.
#[derive(Debug, Clone)]
struct Group {
    /// Observed index (activity + 2 damage) at the start.
    from: u8,
    /// Counts by observed index at the end.
    counts: [u32; 4],
    /// Start of this group's covariates in the patient arena.
    z_start: usize,
}

impl Group {
    fn touches_damage(&self) -> bool {
        self.from >= 2 || self.counts[2] > 0 || self.counts[3] > 0
    }
}

#[derive(Debug, Clone)]
struct Interval {
    dt: f64,
    groups: std::ops::Range<usize>,
}

/// One patient's usable transitions in evaluation-ready form.
#[derive(Debug, Clone)]
pub struct CompiledPatient {
    pub id: String,
    /// Damage observed at the last visit, so the patient is known to be a
    /// mover.
    pub known_mover: bool,
    intervals: Vec<Interval>,
    groups: Vec<Group>,
    z: Vec<f64>,
    transitions: usize,
}

impl CompiledPatient {
    pub fn n_transitions(&self) -> usize {
        self.transitions
    }

    pub fn n_intervals(&self) -> usize {
        self.intervals.len()
    }
}

/// Column offsets of each regression within a group's covariate block.
fn offsets(spec: &ModelSpec) -> Vec<usize> {
    let mut out = vec![0];
    for r in 0..spec.kind.n_regressions() {
        out.push(out[r] + spec.design_width(r));
    }
    out
}

/// Group the usable transitions of `patient` (intervals after the first).
pub fn compile_patient(patient: &Patient, spec: &ModelSpec) -> CompiledPatient {
    let derived = DerivedCovariates::for_patient(patient);
    let stride = *offsets(spec).last().unwrap();
    let mut out = CompiledPatient {
        id: patient.id.clone(),
        known_mover: patient.damaged_at_last_visit(),
        intervals: Vec::new(),
        groups: Vec::new(),
        z: Vec::new(),
        transitions: 0,
    };
    let mut row = Vec::with_capacity(stride);
    let mut index: HashMap<(u8, Vec<u64>), usize> = HashMap::new();
    let visits = &patient.visits;
    for a in 1..visits.len().saturating_sub(1) {
        let (v0, v1) = (&visits[a], &visits[a + 1]);
        index.clear();
        let first = out.groups.len();
        for l in 0..N_JOINTS {
            let (Some(s0), Some(s1)) = (v0.joints[l], v1.joints[l]) else {
                continue;
            };
            let joint = JointId::from_index(l);
            row.clear();
            let defined = spec.covariates.iter().all(|kinds| {
                derived.write_row(patient, a, joint, kinds, spec.time_updated_duration, &mut row)
            });
            if !defined {
                continue;
            }
            let from = observed_index(s0) as u8;
            let key = (from, row.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
            let g = *index.entry(key).or_insert_with(|| {
                out.groups.push(Group {
                    from,
                    counts: [0; 4],
                    z_start: out.z.len(),
                });
                out.z.extend_from_slice(&row);
                out.groups.len() - 1
            });
            out.groups[g].counts[observed_index(s1)] += 1;
            out.transitions += 1;
        }
        if out.groups.len() > first {
            out.intervals.push(Interval {
                dt: v1.time - v0.time,
                groups: first..out.groups.len(),
            });
        }
    }
    out
}

/// Log-likelihood evaluator over a fixed dataset and model specification.
#[derive(Debug, Clone)]
pub struct Likelihood {
    spec: ModelSpec,
    rule: QuadratureRule,
    patients: Vec<CompiledPatient>,
}

impl Likelihood {
    pub fn new(dataset: &PanelDataset, spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let rule = gauss_hermite_rule(spec.quadrature_points)?;
        let patients = dataset
            .patients()
            .par_iter()
            .map(|p| compile_patient(p, spec))
            .filter(|c| c.n_intervals() > 0)
            .collect();
        Ok(Self {
            spec: spec.clone(),
            rule,
            patients,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn patients(&self) -> &[CompiledPatient] {
        &self.patients
    }

    pub fn n_transitions(&self) -> usize {
        self.patients.iter().map(|p| p.transitions).sum()
    }

    /// Marginal log-likelihood contribution of each compiled patient, in
    /// patient order.
    pub fn patient_logliks(&self, params: &Params) -> Result<Vec<f64>> {
        let ctx = Context::new(&self.spec, &self.rule, params)?;
        self.patients
            .par_iter()
            .map(|p| ctx.marginal(p))
            .collect()
    }

    /// Total marginal log-likelihood. The sum is correctly rounded, so the
    /// value does not depend on patient order.
    pub fn loglik(&self, params: &Params) -> Result<f64> {
        Ok(exact_sum(&self.patient_logliks(params)?))
    }

    /// Conditional log-likelihood of one compiled patient under a hypothesis.
    pub fn conditional(&self, patient: &CompiledPatient, hypothesis: Hypothesis, params: &Params) -> Result<f64> {
        let ctx = Context::new(&self.spec, &self.rule, params)?;
        let (m, s) = ctx.branches(patient, true)?;
        Ok(match hypothesis {
            Hypothesis::Mover => m,
            Hypothesis::Stayer => s,
        })
    }
}

/// Correctly rounded sum (Shewchuk's algorithm). Falls back to plain
/// summation when an input is not finite.
pub fn exact_sum(xs: &[f64]) -> f64 {
    if xs.iter().any(|x| !x.is_finite()) {
        return xs.iter().sum();
    }
    let mut partials: Vec<f64> = Vec::new();
    for &x in xs {
        let mut x = x;
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    // round-half-even correction as in Python's math.fsum
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

enum Family<'a> {
    Six {
        p: &'a SixStateParams,
        links: SixStateLinks,
        exp_u: Vec<f64>,
        exp_alpha_u: Vec<f64>,
        exp_v: Vec<f64>,
    },
    Five {
        p: &'a FiveStateParams,
        exp_u: Vec<f64>,
        exp_alpha1_u: Vec<f64>,
        v: Vec<f64>,
        stayer_inactive: f64,
        stayer_active: f64,
    },
}

struct Context<'a> {
    spec: &'a ModelSpec,
    grid: BivariateGrid,
    family: Family<'a>,
    offsets: Vec<usize>,
    log_pi: f64,
    log_one_minus_pi: f64,
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn check_rate(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::ParameterExplosion(format!("intensity evaluated to {x}")))
    }
}

/// `counts . log(row)` with underflowed entries floored.
#[inline]
fn row_loglik(row: &[f64], counts: &[u32]) -> f64 {
    let mut acc = 0.0;
    for (p, &c) in row.iter().zip(counts) {
        if c == 0 {
            continue;
        }
        let p = if *p < f64::MIN_POSITIVE {
            FLOOR_HITS.fetch_add(1, Ordering::Relaxed);
            f64::MIN_POSITIVE
        } else {
            *p
        };
        acc += c as f64 * p.ln();
    }
    acc
}

impl<'a> Context<'a> {
    fn new(spec: &'a ModelSpec, rule: &QuadratureRule, params: &'a Params) -> Result<Self> {
        if params.kind() != spec.kind {
            return Err(Error::Config(format!(
                "parameters are for the {} model, specification is {}",
                params.kind(),
                spec.kind
            )));
        }
        let grid = BivariateGrid::from_params(rule, params.random_effects());
        let family = match params {
            Params::Six(p) => Family::Six {
                p,
                links: SixStateLinks::new(p),
                exp_u: grid.u.iter().map(|u| u.exp()).collect(),
                exp_alpha_u: grid.u.iter().map(|u| (p.alpha * u).exp()).collect(),
                exp_v: grid.v.iter().map(|v| v.exp()).collect(),
            },
            Params::Five(p) => Family::Five {
                p,
                exp_u: grid.u.iter().map(|u| u.exp()).collect(),
                exp_alpha1_u: grid.u.iter().map(|u| (p.alpha1 * u).exp()).collect(),
                v: grid.v.clone(),
                stayer_inactive: p.stayer_inactive.exp(),
                stayer_active: p.stayer_active.exp(),
            },
        };
        let logit = params.logit_pi();
        Ok(Self {
            spec,
            grid,
            family,
            offsets: offsets(spec),
            log_pi: -softplus(-logit),
            log_one_minus_pi: -softplus(logit),
        })
    }

    fn z<'p>(&self, patient: &'p CompiledPatient, g: &Group, r: usize) -> &'p [f64] {
        &patient.z[g.z_start + self.offsets[r]..g.z_start + self.offsets[r + 1]]
    }

    /// Add the log-probability of group `g` at every node to `mover` and,
    /// when given, `stayer`.
    fn accumulate(
        &self,
        patient: &CompiledPatient,
        g: &Group,
        dt: f64,
        mover: &mut [f64],
        stayer: Option<&mut [f64]>,
    ) -> Result<()> {
        let n = self.grid.n;
        let from = g.from as usize;
        let reversal = from >= 2 && (g.counts[0] > 0 || g.counts[1] > 0);
        if reversal {
            warn!("patient {}: damage reversal in likelihood data", patient.id);
            mover.iter_mut().for_each(|x| *x = f64::NEG_INFINITY);
        }
        match &self.family {
            Family::Six {
                p,
                links,
                exp_u,
                exp_alpha_u,
                exp_v,
            } => {
                let e0 = p.activation.linear_predictor(self.z(patient, g, 0)).exp();
                let e1 = p.deactivation.linear_predictor(self.z(patient, g, 1)).exp();
                let e2 = p.damage.linear_predictor(self.z(patient, g, 2)).exp();
                if !reversal {
                    for k in 0..n {
                        let l12 = check_rate(e0 * exp_u[k])?;
                        let l21 = check_rate(e1 * exp_alpha_u[k])?;
                        if from >= 2 {
                            // damaged rows do not depend on v
                            let r = links.mover(l12, l21, 0.0);
                            let row = four_state_row(&r, dt, from)?;
                            let ll = row_loglik(&row, &g.counts);
                            mover[k * n..(k + 1) * n].iter_mut().for_each(|x| *x += ll);
                            continue;
                        }
                        for l in 0..n {
                            let i = k * n + l;
                            let l13 = check_rate(e2 * exp_v[i])?;
                            let r = links.mover(l12, l21, l13);
                            let row = four_state_row(&r, dt, from)?;
                            mover[i] += row_loglik(&row, &g.counts);
                        }
                    }
                }
                if let Some(stayer) = stayer {
                    if g.touches_damage() {
                        stayer.iter_mut().for_each(|x| *x = f64::NEG_INFINITY);
                    } else {
                        for k in 0..n {
                            let r = links.stayer(e0 * exp_u[k], e1 * exp_alpha_u[k]);
                            let row = two_state_row(check_rate(r.forward)?, check_rate(r.backward)?, dt, from);
                            let ll = row_loglik(&row, &g.counts[..2]);
                            stayer[k * n..(k + 1) * n].iter_mut().for_each(|x| *x += ll);
                        }
                    }
                }
            }
            Family::Five {
                p,
                exp_u,
                exp_alpha1_u,
                v,
                stayer_inactive,
                stayer_active,
            } => {
                let m1 = p.sojourn_inactive.linear_predictor(self.z(patient, g, 0)).exp();
                let m2 = p.sojourn_active.linear_predictor(self.z(patient, g, 1)).exp();
                let o13 = p.jump_inactive.linear_predictor(self.z(patient, g, 2));
                let o23 = p.jump_active.linear_predictor(self.z(patient, g, 3));
                // five-state mover index: damaged collapses to one state
                let counts5 = [g.counts[0], g.counts[1], g.counts[2] + g.counts[3]];
                if !reversal && from < 2 {
                    for k in 0..n {
                        let mu1 = check_rate(m1 * exp_u[k])?;
                        let mu2 = check_rate(m2 * exp_alpha1_u[k])?;
                        for l in 0..n {
                            let i = k * n + l;
                            let p13 = logistic(o13 + v[i]);
                            let p23 = logistic(o23 + p.alpha2 * v[i]);
                            let r = crate::model::ThreeStateRates {
                                l12: check_rate((1.0 - p13) / mu1)?,
                                l13: check_rate(p13 / mu1)?,
                                l21: check_rate((1.0 - p23) / mu2)?,
                                l23: check_rate(p23 / mu2)?,
                            };
                            let row = three_state_row(&r, dt, from)?;
                            mover[i] += row_loglik(&row, &counts5);
                        }
                    }
                }
                if let Some(stayer) = stayer {
                    if g.touches_damage() {
                        stayer.iter_mut().for_each(|x| *x = f64::NEG_INFINITY);
                    } else {
                        for k in 0..n {
                            let mu4 = m1 * exp_u[k] * stayer_inactive;
                            let mu5 = m2 * exp_alpha1_u[k] * stayer_active;
                            let row = two_state_row(check_rate(1.0 / mu4)?, check_rate(1.0 / mu5)?, dt, from);
                            let ll = row_loglik(&row, &g.counts[..2]);
                            stayer[k * n..(k + 1) * n].iter_mut().for_each(|x| *x += ll);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn integrate(&self, values: &[f64]) -> f64 {
        log_sum_exp(
            values
                .iter()
                .zip(&self.grid.log_weights)
                .map(|(v, w)| v + w),
        )
    }

    /// Conditional log-likelihoods under the mover and stayer hypotheses. The
    /// stayer value is `-inf` when not requested.
    fn branches(&self, patient: &CompiledPatient, want_stayer: bool) -> Result<(f64, f64)> {
        let size = self.grid.len();
        let mut mover = vec![0.0; size];
        let mut stayer = vec![0.0; if want_stayer { size } else { 0 }];
        let (mut lm, mut ls) = (0.0, 0.0);
        let per_interval = self.spec.random_effects == RandomEffectsStructure::ObservationLevel;
        for iv in &patient.intervals {
            for g in &patient.groups[iv.groups.clone()] {
                let s = if want_stayer { Some(&mut stayer[..]) } else { None };
                self.accumulate(patient, g, iv.dt, &mut mover, s)?;
            }
            if per_interval {
                lm += self.integrate(&mover);
                mover.iter_mut().for_each(|x| *x = 0.0);
                if want_stayer {
                    ls += self.integrate(&stayer);
                    stayer.iter_mut().for_each(|x| *x = 0.0);
                }
            }
        }
        if !per_interval {
            lm = self.integrate(&mover);
            if want_stayer {
                ls = self.integrate(&stayer);
            }
        }
        if !want_stayer {
            ls = f64::NEG_INFINITY;
        }
        Ok((lm, ls))
    }

    fn marginal(&self, patient: &CompiledPatient) -> Result<f64> {
        if patient.known_mover {
            let (m, _) = self.branches(patient, false)?;
            Ok(self.log_one_minus_pi + m)
        } else {
            let (m, s) = self.branches(patient, self.log_pi > f64::NEG_INFINITY)?;
            Ok(log_sum_exp([self.log_one_minus_pi + m, self.log_pi + s]))
        }
    }
}

/// Conditional log-likelihood of one patient given the class `hypothesis`.
/// Zero for a patient without usable intervals.
pub fn patient_conditional_loglik(
    patient: &Patient,
    hypothesis: Hypothesis,
    params: &Params,
    spec: &ModelSpec,
    rule: &QuadratureRule,
) -> Result<f64> {
    let cp = compile_patient(patient, spec);
    let ctx = Context::new(spec, rule, params)?;
    let (m, s) = ctx.branches(&cp, hypothesis == Hypothesis::Stayer)?;
    Ok(match hypothesis {
        Hypothesis::Mover => m,
        Hypothesis::Stayer => s,
    })
}

/// Marginal (mover-stayer mixture) log-likelihood of one patient.
pub fn patient_marginal_loglik(
    patient: &Patient,
    params: &Params,
    spec: &ModelSpec,
    rule: &QuadratureRule,
) -> Result<f64> {
    let cp = compile_patient(patient, spec);
    if cp.n_intervals() == 0 {
        return Ok(0.0);
    }
    Context::new(spec, rule, params)?.marginal(&cp)
}

/// Total marginal log-likelihood of `dataset`.
pub fn total_loglik(dataset: &PanelDataset, params: &Params, spec: &ModelSpec) -> Result<f64> {
    Likelihood::new(dataset, spec)?.loglik(params)
}
