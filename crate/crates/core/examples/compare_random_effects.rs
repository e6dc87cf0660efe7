//! Observation-level versus patient-level random effects on the same data.

use clustered_msm::estimation::{fit, FitOptions};
use clustered_msm::model::RandomEffectsStructure;
use clustered_msm::simulator::{simulate_cohort, SimConfig};

fn main() -> clustered_msm::Result<()> {
    let cfg = SimConfig::six_state_default(40, 77);
    let data = simulate_cohort(&cfg)?.dataset;
    let options = FitOptions {
        standard_errors: false,
        ..FitOptions::default()
    };

    let obs_spec = cfg.spec.clone().with_quadrature(7);
    let obs = fit(&data, &obs_spec, &options)?;
    let patient_spec = cfg
        .spec
        .clone()
        .with_random_effects(RandomEffectsStructure::PatientLevel)
        .with_quadrature(15);
    let warm = FitOptions {
        initial: Some(obs.params.clone()),
        ..options
    };
    let pat = fit(&data, &patient_spec, &warm)?;

    for (name, f) in [("observation-level", &obs), ("patient-level", &pat)] {
        let re = f.params.random_effects();
        println!(
            "{name:>18}: log-likelihood {:.3}, var_u {:.3}, var_v {:.3}, rho {:.3}, pi {:.3}",
            f.log_likelihood,
            re.var_u(),
            re.var_v(),
            re.rho(),
            f.params.pi()
        );
    }
    println!("difference {:.3}", obs.log_likelihood - pat.log_likelihood);
    Ok(())
}
