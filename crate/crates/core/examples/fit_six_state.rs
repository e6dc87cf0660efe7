//! Fit the six-state mover-stayer model to a simulated cohort and compare
//! with the generating values.

use std::collections::BTreeMap;

use clustered_msm::estimation::{fit, table_report, FitOptions};
use clustered_msm::model::layout;
use clustered_msm::simulator::{simulate_cohort, SimConfig};

fn main() -> clustered_msm::Result<()> {
    let cfg = SimConfig::six_state_default(60, 2024);
    let cohort = simulate_cohort(&cfg)?;
    // a coarse grid keeps the example quick; 15 points is the default
    let spec = cfg.spec.clone().with_quadrature(7);
    let result = fit(&cohort.dataset, &spec, &FitOptions::default())?;

    let truth: BTreeMap<String, f64> = layout(&spec)
        .iter()
        .map(|p| p.key())
        .zip(cfg.truth.natural_values(&spec))
        .collect();
    print!("{}", table_report(&result, Some(&truth)));
    Ok(())
}
