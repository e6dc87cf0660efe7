//! Simulate a cohort, write it as long-format CSV and tabulate the observed
//! transitions.

use clustered_msm::simulator::{empirical_transition_table, simulate_cohort, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SimConfig::six_state_default(200, 42);
    let cohort = simulate_cohort(&cfg)?;
    let visits: usize = cohort.dataset.patients().iter().map(|p| p.visits.len()).sum();
    println!(
        "{} patients, {} stayers, {visits} visits",
        cohort.dataset.len(),
        cohort.stayer_count()
    );

    let labels = ["inactive", "active", "inactive dmg", "active dmg"];
    println!("{:>14} {:>10} {:>10} {:>13} {:>11}", "from \\ to", labels[0], labels[1], labels[2], labels[3]);
    for (label, row) in labels.iter().zip(empirical_transition_table(&cohort.dataset)) {
        println!("{label:>14} {:>10} {:>10} {:>13} {:>11}", row[0], row[1], row[2], row[3]);
    }

    let dir = std::env::temp_dir().join("cmsm-simulate-example");
    std::fs::create_dir_all(&dir)?;
    cohort.dataset.write_csv_path(&dir.join("data.csv"))?;
    cohort.write_truth_path(&dir.join("truth.csv"))?;
    println!("wrote {}", dir.display());
    Ok(())
}
