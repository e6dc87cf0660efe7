//! Five-state model in the sojourn/jump parameterization: fit, then map the
//! estimates back to transition intensities.

use clustered_msm::estimation::{fit, table_report, FitOptions};
use clustered_msm::model::{five_state_sojourn_params, sojourn_to_intensities, Params};
use clustered_msm::simulator::{simulate_cohort, SimConfig};

fn main() -> clustered_msm::Result<()> {
    let cfg = SimConfig::five_state_default(60, 11);
    let cohort = simulate_cohort(&cfg)?;
    let spec = cfg.spec.clone().with_quadrature(7);
    let result = fit(&cohort.dataset, &spec, &FitOptions::default())?;
    print!("{}", table_report(&result, None));

    let Params::Five(p) = &result.params else { unreachable!() };
    let z: [&[f64]; 4] = [&[], &[], &[], &[]];
    let s = five_state_sojourn_params(&z, 0.0, 0.0, p)?;
    println!("\nmean sojourns {:.3} / {:.3} years, jump probabilities {:.3} / {:.3}", s.mu1, s.mu2, s.p13, s.p23);
    let r = sojourn_to_intensities(&s)?;
    println!("intensities at u = v = 0:");
    println!("  inactive -> active  {:.4}", r.mover.l12);
    println!("  inactive -> damaged {:.4}", r.mover.l13);
    println!("  active -> inactive  {:.4}", r.mover.l21);
    println!("  active -> damaged   {:.4}", r.mover.l23);
    println!("  stayer on / off     {:.4} / {:.4}", r.stayer.forward, r.stayer.backward);
    Ok(())
}
