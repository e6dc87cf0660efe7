//! Command layer behind the `cmsm` binary.

mod commands;
mod config;
mod validate;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use log::error;

pub use commands::{
    load_dataset, read_truth_parameters, run_fit, run_simulate, run_summarize, run_validate,
    summarize, DATA_FILE, METADATA_FILE, PARAMETERS_FILE, REPORT_FILE, SUMMARY_FILE, TRUTH_FILE,
    TRUTH_PARAMETERS_FILE, VALIDATION_FILE,
};
pub use config::{
    ConfigFile, CovariateSection, OptimizerSection, Overrides, RunConfig, SimulationSection,
    ValidateSection,
};
pub use validate::{
    kernel_checks, likelihood_checks, quadrature_checks, random_four, random_three,
    run_validation, Check, Fault, ValidationReport, KERNEL_TOLERANCE, ROW_SUM_TOLERANCE,
    SEMIGROUP_TOLERANCE,
};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cmsm", version, about = "Clustered multi-state models for joint-level panel data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Long-format CSV panel data.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_parser = ["six", "five"])]
    pub model: Option<String>,
    #[arg(long, global = true, value_parser = ["obs", "patient"])]
    pub re: Option<String>,
    /// Gauss-Hermite points per dimension.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..=100))]
    pub quad: Option<u16>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model by maximum likelihood.
    Fit {
        /// `key,value` file of generating values to compare against.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Simulate a cohort with known truth.
    Simulate,
    /// Check kernels, quadrature and likelihood identities.
    Validate {
        /// Random draws per kernel check.
        #[arg(long)]
        grid: Option<usize>,
        /// Inject a defect to confirm the checks catch it.
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Describe a dataset.
    Summarize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    P12Sign,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Execute parsed arguments and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    let file = match &cli.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(f) => f,
            Err(e) => {
                error!("{e}");
                eprintln!("error: {e}");
                return exit_code(&e);
            }
        },
        None => ConfigFile::default(),
    };
    let over = Overrides {
        model: cli.model.clone(),
        re: cli.re.clone(),
        quadrature: cli.quad.map(usize::from),
        seed: cli.seed,
        data: cli.data.clone(),
        out: cli.out.clone(),
    };
    let rc = match RunConfig::resolve(file, &over) {
        Ok(rc) => rc,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let result = match &cli.command {
        Command::Fit { truth } => run_fit(&rc, truth.as_deref()).map(|(fit, report)| {
            print!("{report}");
            if !fit.converged {
                eprintln!("warning: optimizer did not converge ({})", fit.message);
            }
            EXIT_OK
        }),
        Command::Simulate => run_simulate(&rc).map(|c| {
            println!(
                "simulated {} patients ({} stayers)",
                c.dataset.len(),
                c.stayer_count()
            );
            EXIT_OK
        }),
        Command::Validate { grid, inject_fault } => {
            let fault = inject_fault.map(|f| match f {
                FaultArg::P12Sign => Fault::P12Sign,
            });
            run_validate(&rc, *grid, fault).map(|report| {
                print!("{}", report.render());
                if report.passed() {
                    EXIT_OK
                } else {
                    EXIT_FAILURE
                }
            })
        }
        Command::Summarize => run_summarize(&rc).map(|text| {
            print!("{text}");
            EXIT_OK
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Parse `args` (including the program name) and run.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
    }
}
