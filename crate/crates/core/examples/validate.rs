//! The self-check suite behind `cmsm validate`, with and without a planted
//! defect.

use clustered_msm::cli::{run_validation, Fault};

fn main() -> clustered_msm::Result<()> {
    let report = run_validation(2000, 1, None)?;
    print!("{}", report.render());
    println!("all passed: {}\n", report.passed());

    let broken = run_validation(2000, 1, Some(Fault::P12Sign))?;
    print!("{}", broken.render());
    println!("all passed with the p12 sign flipped: {}", broken.passed());
    Ok(())
}
