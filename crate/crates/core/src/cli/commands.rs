use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;

use super::config::RunConfig;
use super::validate::{run_validation, Fault, ValidationReport};
use crate::covariates::{IngestOptions, PanelDataset};
use crate::error::{Error, Result};
use crate::estimation::{fit, metadata_block, parameter_table, table_report, FitOptions, FitResult};
use crate::model::layout;
use crate::simulator::{empirical_transition_table, simulate_cohort, SimulatedCohort};

pub const DATA_FILE: &str = "data.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const TRUTH_PARAMETERS_FILE: &str = "truth_parameters.csv";
pub const PARAMETERS_FILE: &str = "parameters.csv";
pub const METADATA_FILE: &str = "metadata.txt";
pub const REPORT_FILE: &str = "report.txt";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const VALIDATION_FILE: &str = "validation.txt";

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn out_dir(rc: &RunConfig) -> Result<Option<PathBuf>> {
    match &rc.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            Ok(Some(dir.clone()))
        }
        None => Ok(None),
    }
}

fn data_path(rc: &RunConfig) -> Result<&Path> {
    rc.data
        .as_deref()
        .ok_or_else(|| Error::Config("a data file is required (--data or `data` in the config)".into()))
}

pub fn load_dataset(rc: &RunConfig) -> Result<PanelDataset> {
    let options = IngestOptions {
        require_undamaged_entry: rc.file.require_undamaged_entry.unwrap_or(false),
    };
    PanelDataset::from_csv_path(data_path(rc)?, options)
}

/// `key,value` table of natural-scale parameter values.
pub fn read_truth_parameters(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let value = rec[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("cannot parse `{}` as a number", &rec[1]),
        })?;
        out.insert(rec[0].to_string(), value);
    }
    Ok(out)
}

/// Fit the configured model. Writes the parameter table, metadata and the
/// report when an output directory is set. Truth values are taken from
/// `truth`, or from a `truth_parameters.csv` next to the data file.
pub fn run_fit(rc: &RunConfig, truth: Option<&Path>) -> Result<(FitResult, String)> {
    let dataset = load_dataset(rc)?;
    let options = FitOptions {
        optimizer: rc.optimizer(),
        standard_errors: rc.file.optimizer.standard_errors.unwrap_or(true),
        initial: None,
        fixed: rc.file.optimizer.fixed.clone().unwrap_or_default(),
    };
    let mut result = fit(&dataset, &rc.spec, &options)?;
    result.seed = Some(rc.seed);
    let sibling = data_path(rc)?
        .parent()
        .map(|d| d.join(TRUTH_PARAMETERS_FILE))
        .filter(|p| p.exists());
    let truth_values = match truth.map(Path::to_path_buf).or(sibling) {
        Some(p) => Some(read_truth_parameters(&p)?),
        None => None,
    };
    let report = table_report(&result, truth_values.as_ref());
    if let Some(dir) = out_dir(rc)? {
        write(&dir.join(PARAMETERS_FILE), &parameter_table(&result))?;
        write(&dir.join(METADATA_FILE), &metadata_block(&result))?;
        write(&dir.join(REPORT_FILE), &report)?;
        info!("fit written to {}", dir.display());
    }
    Ok((result, report))
}

/// Simulate a cohort and write data, truth sidecar and generating values.
pub fn run_simulate(rc: &RunConfig) -> Result<SimulatedCohort> {
    let cfg = rc.simulation()?;
    let cohort = simulate_cohort(&cfg)?;
    let dir = out_dir(rc)?.ok_or_else(|| Error::Config("simulate needs --out".into()))?;
    cohort.dataset.write_csv_path(&dir.join(DATA_FILE))?;
    cohort.write_truth_path(&dir.join(TRUTH_FILE))?;
    let mut text = String::from("key,value\n");
    for (info, value) in layout(&cfg.spec).iter().zip(cfg.truth.natural_values(&cfg.spec)) {
        let _ = writeln!(text, "{},{value}", info.key());
    }
    write(&dir.join(TRUTH_PARAMETERS_FILE), &text)?;
    info!(
        "simulated {} patients ({} stayers) into {}",
        cohort.dataset.len(),
        cohort.stayer_count(),
        dir.display()
    );
    Ok(cohort)
}

pub fn run_validate(rc: &RunConfig, grid: Option<usize>, fault: Option<Fault>) -> Result<ValidationReport> {
    let grid = grid.or(rc.file.validate.grid).unwrap_or(1000);
    let report = run_validation(grid, rc.seed, fault)?;
    if let Some(dir) = out_dir(rc)? {
        write(&dir.join(VALIDATION_FILE), &report.render())?;
    }
    Ok(report)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn describe(values: &mut [f64]) -> String {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    format!(
        "mean {mean:.3}, sd {sd:.3}, median {:.3}, IQR ({:.3}, {:.3}), range ({:.3}, {:.3})",
        quantile(values, 0.5),
        quantile(values, 0.25),
        quantile(values, 0.75),
        values[0],
        values[values.len() - 1]
    )
}

/// Descriptive summary of a dataset.
pub fn summarize(dataset: &PanelDataset) -> Result<String> {
    if dataset.is_empty() {
        return Err(Error::Validation(vec!["dataset has no patients".into()]));
    }
    let mut out = String::new();
    let patients = dataset.patients();
    let _ = writeln!(out, "patients: {}", patients.len());
    let mut follow: Vec<f64> = patients.iter().map(|p| p.follow_up()).collect();
    let _ = writeln!(out, "follow-up (years): {}", describe(&mut follow));
    let mut visits: Vec<f64> = patients.iter().map(|p| p.visits.len() as f64).collect();
    let _ = writeln!(out, "visits per patient: {}", describe(&mut visits));
    let mut gaps: Vec<f64> = patients
        .iter()
        .flat_map(|p| p.visits.windows(2).map(|w| w[1].time - w[0].time))
        .collect();
    if !gaps.is_empty() {
        let _ = writeln!(out, "inter-visit gap (years): {}", describe(&mut gaps));
    }
    let male = patients.iter().filter(|p| p.sex == 1).count();
    let _ = writeln!(out, "male: {male} ({:.1}%)", 100.0 * male as f64 / patients.len() as f64);
    let never = patients.iter().filter(|p| !p.damaged_at_last_visit()).count();
    let _ = writeln!(
        out,
        "never damaged by last visit: {never} ({:.1}%)",
        100.0 * never as f64 / patients.len() as f64
    );
    let table = empirical_transition_table(dataset);
    let names = ["inactive/undamaged", "active/undamaged", "inactive/damaged", "active/damaged"];
    let _ = writeln!(out, "\nobserved transitions (rows: from, columns: to)");
    let _ = write!(out, "{:<20}", "");
    for n in names {
        let _ = write!(out, "{n:>20}");
    }
    out.push('\n');
    for (i, row) in table.iter().enumerate() {
        let _ = write!(out, "{:<20}", names[i]);
        for c in row {
            let _ = write!(out, "{c:>20}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn run_summarize(rc: &RunConfig) -> Result<String> {
    let dataset = load_dataset(rc)?;
    let mut text = summarize(&dataset)?;
    let sidecar = data_path(rc)?
        .parent()
        .map(|d| d.join(TRUTH_FILE))
        .filter(|p| p.exists());
    if let Some(path) = sidecar {
        let mut rdr = csv::Reader::from_path(&path)?;
        let mut labels = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            labels.insert(rec[0].to_string(), &rec[1] == "1");
        }
        let stayers = labels.values().filter(|s| **s).count();
        let _ = writeln!(
            text,
            "\nstayers in truth sidecar: {stayers} of {} ({:.1}%)",
            labels.len(),
            100.0 * stayers as f64 / labels.len().max(1) as f64
        );
    }
    if let Some(dir) = out_dir(rc)? {
        write(&dir.join(SUMMARY_FILE), &text)?;
    }
    Ok(text)
}
