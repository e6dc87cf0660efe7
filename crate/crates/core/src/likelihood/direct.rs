use crate::covariates::{DerivedCovariates, JointId, Patient, N_JOINTS};
use crate::error::{Error, Result};
use crate::kernels::{four_state_tpm, three_state_tpm, two_state_tpm};
use crate::model::{
    five_state_sojourn_params, six_state_intensities, sojourn_to_intensities, FiveStateCode,
    Hypothesis, ModelSpec, Params, SixStateCode,
};

/// Probability of the observed states at visit `start + 1` given those at
/// visit `start` (zero-based), for fixed random effects `(u, v)`: the
/// product over joints observed at both visits of the kernel entry. Joints
/// whose covariates are undefined at `start` are left out.
///
/// Intended as a readable reference; the likelihood itself uses the grouped
/// evaluator.
pub fn interval_block(
    patient: &Patient,
    start: usize,
    hypothesis: Hypothesis,
    u: f64,
    v: f64,
    params: &Params,
    spec: &ModelSpec,
) -> Result<f64> {
    if start + 1 >= patient.visits.len() {
        return Err(Error::Domain(format!(
            "interval starting at visit {start} needs a following visit"
        )));
    }
    let derived = DerivedCovariates::for_patient(patient);
    let (v0, v1) = (&patient.visits[start], &patient.visits[start + 1]);
    let dt = v1.time - v0.time;
    let mut prob = 1.0;
    for l in 0..N_JOINTS {
        let (Some(s0), Some(s1)) = (v0.joints[l], v1.joints[l]) else {
            continue;
        };
        let joint = JointId::from_index(l);
        let mut rows = Vec::new();
        let mut defined = true;
        for kinds in &spec.covariates {
            let mut row = Vec::new();
            defined &= derived.write_row(patient, start, joint, kinds, spec.time_updated_duration, &mut row);
            rows.push(row);
        }
        if !defined {
            continue;
        }
        let z: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let entry = match params {
            Params::Six(p) => {
                let rates = six_state_intensities(&z, u, v, p)?;
                match (
                    SixStateCode::encode(s0, hypothesis),
                    SixStateCode::encode(s1, hypothesis),
                ) {
                    (Some(a), Some(b)) => match hypothesis {
                        Hypothesis::Mover => four_state_tpm(&rates.mover, dt)?
                            .get(a.kernel_index(), b.kernel_index()),
                        Hypothesis::Stayer => {
                            two_state_tpm(rates.stayer.forward, rates.stayer.backward, dt)?
                                .get(a.kernel_index(), b.kernel_index())
                        }
                    },
                    _ => 0.0,
                }
            }
            Params::Five(p) => {
                let rates = sojourn_to_intensities(&five_state_sojourn_params(&z, u, v, p)?)?;
                match (
                    FiveStateCode::encode(s0, hypothesis),
                    FiveStateCode::encode(s1, hypothesis),
                ) {
                    (Some(a), Some(b)) => match hypothesis {
                        Hypothesis::Mover => three_state_tpm(&rates.mover, dt)?
                            .get(a.kernel_index(), b.kernel_index()),
                        Hypothesis::Stayer => {
                            two_state_tpm(rates.stayer.forward, rates.stayer.backward, dt)?
                                .get(a.kernel_index(), b.kernel_index())
                        }
                    },
                    _ => 0.0,
                }
            }
        };
        prob *= entry;
    }
    Ok(prob)
}
