//! Descriptive summary of a dataset read from CSV.

use clustered_msm::cli::summarize;
use clustered_msm::covariates::{IngestOptions, PanelDataset};
use clustered_msm::simulator::{simulate_cohort, SimConfig};

fn main() -> clustered_msm::Result<()> {
    let mut csv = Vec::new();
    simulate_cohort(&SimConfig::five_state_default(80, 5))?.dataset.write_csv(&mut csv)?;
    let data = PanelDataset::from_csv_reader(csv.as_slice(), IngestOptions::default())?;
    print!("{}", summarize(&data)?);
    Ok(())
}
