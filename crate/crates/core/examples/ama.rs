//! Adjusted mean activity and the other visit-level covariates.

use clustered_msm::covariates::{compute_ama, DerivedCovariates, JointId, Patient, Visit};
use clustered_msm::model::JointStatus;

fn main() {
    let times = [0.0, 1.0, 2.0, 3.0, 5.0];
    let active = [0.0, 1.0, 0.0, 0.0, 1.0];
    for &t in &times {
        match compute_ama(&times, &active, t) {
            Some(a) => println!("AMA({t}) = {a:.4}"),
            None => println!("AMA({t}) undefined"),
        }
    }

    // a patient whose right second MCP is damaged from the third visit on
    let left = JointId::all()[2];
    let right = left.opposite();
    let mut visits = Vec::new();
    for (j, &t) in times.iter().enumerate() {
        let mut v = Visit::new(t);
        v.joints[left.index()] = Some(JointStatus::new(active[j] == 1.0, false));
        v.joints[right.index()] = Some(JointStatus::new(false, j >= 2));
        visits.push(v);
    }
    let patient = Patient {
        id: "7".into(),
        sex: 0,
        age_at_onset: 9.5,
        arthritis_duration_at_entry: 4.0,
        visits,
    };
    let d = DerivedCovariates::for_patient(&patient);
    for (j, v) in patient.visits.iter().enumerate() {
        println!(
            "visit {j} (t = {}): damaged count {}, {left} contralateral damaged {}, {left} AMA {:?}",
            v.time, d.damaged_count[j], d.opposite_damaged[j][left.index()], d.ama[j][left.index()]
        );
    }
}
