use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::covariates::CovariateKind;
use crate::error::{Error, Result};
use crate::estimation::OptimizerOptions;
use crate::model::{ModelKind, ModelSpec, RandomEffectsStructure};
use crate::simulator::SimConfig;

/// Contents of a run configuration file. Every field is optional; command
/// line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<String>,
    pub re: Option<String>,
    pub quadrature: Option<usize>,
    pub seed: Option<u64>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Drop patients with damage at their first visit.
    pub require_undamaged_entry: Option<bool>,
    #[serde(default)]
    pub covariates: CovariateSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    /// Natural-scale generating values keyed like the parameter table.
    #[serde(default)]
    pub truth: BTreeMap<String, f64>,
    #[serde(default)]
    pub validate: ValidateSection,
}

/// Covariate lists per regression label; absent labels keep the defaults.
/// Unknown labels are rejected when the config is resolved.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
pub struct CovariateSection {
    /// Use intercept-only regressions unless a list is given.
    pub intercept_only: Option<bool>,
    pub time_updated_duration: Option<bool>,
    #[serde(flatten)]
    pub lists: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub gradient_tolerance: Option<f64>,
    pub relative_tolerance: Option<f64>,
    pub stall_iterations: Option<usize>,
    pub max_iterations: Option<usize>,
    pub standard_errors: Option<bool>,
    /// Parameter keys held at their starting values.
    pub fixed: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_patients: Option<usize>,
    pub median_gap: Option<f64>,
    pub gap_log_sd: Option<f64>,
    pub min_gap: Option<f64>,
    pub max_gap: Option<f64>,
    pub min_visits: Option<usize>,
    pub max_visits: Option<usize>,
    pub male_fraction: Option<f64>,
    pub age_onset_mean: Option<f64>,
    pub age_onset_sd: Option<f64>,
    pub duration_mean: Option<f64>,
    pub duration_sd: Option<f64>,
    pub initial_active_probability: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub grid: Option<usize>,
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// Settings resolved from the config file and command line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub file: ConfigFile,
    pub spec: ModelSpec,
    pub seed: u64,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub model: Option<String>,
    pub re: Option<String>,
    pub quadrature: Option<usize>,
    pub seed: Option<u64>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(file: ConfigFile, over: &Overrides) -> Result<Self> {
        let model = over.model.clone().or(file.model.clone()).unwrap_or("six".into());
        let kind = ModelKind::from_tag(&model)
            .ok_or_else(|| Error::Config(format!("unknown model `{model}` (six|five)")))?;
        let re = over.re.clone().or(file.re.clone()).unwrap_or("obs".into());
        let structure = RandomEffectsStructure::from_tag(&re)
            .ok_or_else(|| Error::Config(format!("unknown random-effects structure `{re}` (obs|patient)")))?;
        let mut spec = match kind {
            ModelKind::SixState => ModelSpec::six_state(),
            ModelKind::FiveState => ModelSpec::five_state(),
        }
        .with_random_effects(structure);
        if file.covariates.intercept_only.unwrap_or(false) {
            spec = ModelSpec::without_covariates(kind).with_random_effects(structure);
        }
        if let Some(t) = file.covariates.time_updated_duration {
            spec.time_updated_duration = t;
        }
        for (label, list) in &file.covariates.lists {
            let r = kind
                .regression_labels()
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| Error::Config(format!("unknown regression `{label}` for the {kind} model")))?;
            spec.covariates[r] = list
                .iter()
                .map(|k| {
                    CovariateKind::from_key(k)
                        .ok_or_else(|| Error::Config(format!("unknown covariate `{k}`")))
                })
                .collect::<Result<_>>()?;
        }
        if let Some(n) = over.quadrature.or(file.quadrature) {
            spec = spec.with_quadrature(n);
        }
        spec.validate()?;
        Ok(Self {
            seed: over.seed.or(file.seed).unwrap_or(1),
            data: over.data.clone().or(file.data.clone()),
            out: over.out.clone().or(file.out.clone()),
            file,
            spec,
        })
    }

    pub fn optimizer(&self) -> OptimizerOptions {
        let d = OptimizerOptions::default();
        let o = &self.file.optimizer;
        OptimizerOptions {
            gradient_tolerance: o.gradient_tolerance.unwrap_or(d.gradient_tolerance),
            relative_tolerance: o.relative_tolerance.unwrap_or(d.relative_tolerance),
            stall_iterations: o.stall_iterations.unwrap_or(d.stall_iterations),
            max_iterations: o.max_iterations.unwrap_or(d.max_iterations),
            gradient_step: d.gradient_step,
        }
    }

    /// Simulation settings: defaults for the model family, then the
    /// `[simulation]` and `[truth]` sections.
    pub fn simulation(&self) -> Result<SimConfig> {
        let s = &self.file.simulation;
        let n = s.n_patients.unwrap_or(200);
        let mut cfg = match self.spec.kind {
            ModelKind::SixState => SimConfig::six_state_default(n, self.seed),
            ModelKind::FiveState => SimConfig::five_state_default(n, self.seed),
        };
        cfg.truth = cfg.truth_for_spec(&self.spec)?;
        cfg.spec = self.spec.clone();
        let sch = &mut cfg.schedule;
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(sch.median_gap, s.median_gap);
        set!(sch.gap_log_sd, s.gap_log_sd);
        set!(sch.min_gap, s.min_gap);
        set!(sch.max_gap, s.max_gap);
        set!(sch.min_visits, s.min_visits);
        set!(sch.max_visits, s.max_visits);
        let g = &mut cfg.covariates;
        set!(g.male_fraction, s.male_fraction);
        set!(g.age_onset_mean, s.age_onset_mean);
        set!(g.age_onset_sd, s.age_onset_sd);
        set!(g.duration_mean, s.duration_mean);
        set!(g.duration_sd, s.duration_sd);
        set!(cfg.initial_active_probability, s.initial_active_probability);
        for (key, value) in &self.file.truth {
            cfg.truth.set_natural(&self.spec, key, *value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
