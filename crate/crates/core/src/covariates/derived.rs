use super::dataset::Patient;
use super::joint::{encode_joint_type, JointId, N_JOINTS};
use super::kinds::CovariateKind;

/// Adjusted mean activity at time `t`: the area under the linear interpolant
/// of `activity` from `times[0]` to `t`, divided by `t - times[0]`.
///
/// Returns `None` when the value is undefined (`t` not after the second
/// observation time, mismatched or too short inputs, or `t` beyond the data).
pub fn compute_ama(times: &[f64], activity: &[f64], t: f64) -> Option<f64> {
    if times.len() != activity.len() || times.len() < 2 {
        return None;
    }
    let t0 = times[0];
    if !(t >= times[1]) || t > times[times.len() - 1] {
        return None;
    }
    let mut area = 0.0;
    for k in 1..times.len() {
        let (a, b) = (times[k - 1], times[k]);
        if a >= t {
            break;
        }
        let (xa, xb) = (activity[k - 1], activity[k]);
        if b <= t {
            area += 0.5 * (xa + xb) * (b - a);
        } else {
            let xt = xa + (xb - xa) * (t - a) / (b - a);
            area += 0.5 * (xa + xt) * (t - a);
        }
    }
    Some((area / (t - t0)).clamp(0.0, 1.0))
}

/// Damage flags per visit with missing rows filled by the last observed
/// flag (damage is absorbing, so an earlier damaged joint stays damaged).
fn carried_damage(patient: &Patient) -> Vec<[bool; N_JOINTS]> {
    let mut out = Vec::with_capacity(patient.visits.len());
    let mut last = [false; N_JOINTS];
    for v in &patient.visits {
        for (l, s) in v.joints.iter().enumerate() {
            if let Some(s) = s {
                last[l] = s.damaged;
            }
        }
        out.push(last);
    }
    out
}

/// Number of damaged joints at `visit`.
pub fn attained_damaged_count(patient: &Patient, visit: usize) -> u32 {
    carried_damage(patient)[visit]
        .iter()
        .filter(|d| **d)
        .count() as u32
}

/// Whether the contralateral joint is damaged at `visit`.
pub fn opposite_joint_damaged(patient: &Patient, visit: usize, joint: JointId) -> bool {
    carried_damage(patient)[visit][joint.opposite().index()]
}

/// Dynamic covariates for every visit and joint of one patient.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedCovariates {
    /// `ama[j][l]`; `None` where undefined.
    pub ama: Vec<[Option<f64>; N_JOINTS]>,
    pub damaged_count: Vec<u32>,
    pub opposite_damaged: Vec<[bool; N_JOINTS]>,
}

impl DerivedCovariates {
    pub fn for_patient(patient: &Patient) -> Self {
        let m = patient.visits.len();
        let damage = carried_damage(patient);
        let damaged_count = damage
            .iter()
            .map(|d| d.iter().filter(|x| **x).count() as u32)
            .collect();
        let opposite_damaged = damage
            .iter()
            .map(|d| std::array::from_fn(|l| d[JointId::from_index(l).opposite().index()]))
            .collect();

        let mut ama = vec![[None; N_JOINTS]; m];
        let mut times = Vec::with_capacity(m);
        let mut xs = Vec::with_capacity(m);
        for l in 0..N_JOINTS {
            times.clear();
            xs.clear();
            for (j, v) in patient.visits.iter().enumerate() {
                if let Some(s) = v.joints[l] {
                    times.push(v.time);
                    xs.push(if s.active { 1.0 } else { 0.0 });
                    ama[j][l] = compute_ama(&times, &xs, v.time);
                }
            }
        }
        Self {
            ama,
            damaged_count,
            opposite_damaged,
        }
    }

    /// Append the design row for `joint` on the interval starting at `visit`.
    /// Returns `false` (leaving `out` partially written) when a requested
    /// covariate is undefined there.
    pub fn write_row(
        &self,
        patient: &Patient,
        visit: usize,
        joint: JointId,
        kinds: &[CovariateKind],
        time_updated_duration: bool,
        out: &mut Vec<f64>,
    ) -> bool {
        let l = joint.index();
        for kind in kinds {
            match kind {
                CovariateKind::OppositeDamaged => {
                    out.push(if self.opposite_damaged[visit][l] { 1.0 } else { 0.0 })
                }
                CovariateKind::AttainedDamagedCount => out.push(self.damaged_count[visit] as f64),
                CovariateKind::Ama => match self.ama[visit][l] {
                    Some(a) => out.push(a),
                    None => return false,
                },
                CovariateKind::JointType => out.extend_from_slice(&encode_joint_type(joint)),
                CovariateKind::Sex => out.push(patient.sex as f64),
                CovariateKind::AgeAtOnset => out.push(patient.age_at_onset),
                CovariateKind::ArthritisDuration => {
                    let mut d = patient.arthritis_duration_at_entry;
                    if time_updated_duration {
                        d += patient.visits[visit].time - patient.visits[0].time;
                    }
                    out.push(d)
                }
            }
        }
        true
    }
}
