use std::fmt;

use super::states::ModelKind;
use crate::covariates::CovariateKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RandomEffectsStructure {
    /// A fresh bivariate draw per patient and inter-visit interval, shared
    /// by all joints of that patient in that interval.
    ObservationLevel,
    /// One bivariate draw per patient shared by all intervals and joints.
    PatientLevel,
}

impl RandomEffectsStructure {
    pub fn tag(self) -> &'static str {
        match self {
            RandomEffectsStructure::ObservationLevel => "obs",
            RandomEffectsStructure::PatientLevel => "patient",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "obs" | "observation" | "observation_level" => {
                Some(RandomEffectsStructure::ObservationLevel)
            }
            "patient" | "patient_level" => Some(RandomEffectsStructure::PatientLevel),
            _ => None,
        }
    }

    /// Default Gauss-Hermite points per dimension.
    pub fn default_quadrature(self) -> usize {
        match self {
            RandomEffectsStructure::ObservationLevel => 15,
            RandomEffectsStructure::PatientLevel => 30,
        }
    }
}

impl fmt::Display for RandomEffectsStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RandomEffectsStructure::ObservationLevel => "observation_level",
            RandomEffectsStructure::PatientLevel => "patient_level",
        })
    }
}

/// Everything that fixes the shape of a model: family, random-effects
/// structure, quadrature size and which covariates enter which regression.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub random_effects: RandomEffectsStructure,
    pub quadrature_points: usize,
    /// One covariate list per regression, in `kind.regression_labels()` order.
    pub covariates: Vec<Vec<CovariateKind>>,
    /// Arthritis duration advances with visit time when set; otherwise it is
    /// frozen at its entry value.
    pub time_updated_duration: bool,
}

impl ModelSpec {
    /// Six-state model with the covariate layout of the published analysis:
    /// joint type enters activation and damage only.
    pub fn six_state() -> Self {
        use CovariateKind::*;
        let full = vec![
            OppositeDamaged,
            AttainedDamagedCount,
            Ama,
            JointType,
            Sex,
            AgeAtOnset,
            ArthritisDuration,
        ];
        let no_joint_type: Vec<_> = full.iter().copied().filter(|k| *k != JointType).collect();
        Self {
            kind: ModelKind::SixState,
            random_effects: RandomEffectsStructure::ObservationLevel,
            quadrature_points: 15,
            covariates: vec![full.clone(), no_joint_type, full],
            time_updated_duration: true,
        }
    }

    pub fn five_state() -> Self {
        use CovariateKind::*;
        let cov = vec![
            OppositeDamaged,
            AttainedDamagedCount,
            Ama,
            Sex,
            AgeAtOnset,
            ArthritisDuration,
        ];
        Self {
            kind: ModelKind::FiveState,
            random_effects: RandomEffectsStructure::ObservationLevel,
            quadrature_points: 15,
            covariates: vec![cov; 4],
            time_updated_duration: true,
        }
    }

    /// Intercept-only regressions.
    pub fn without_covariates(kind: ModelKind) -> Self {
        let mut spec = match kind {
            ModelKind::SixState => Self::six_state(),
            ModelKind::FiveState => Self::five_state(),
        };
        spec.covariates = vec![Vec::new(); kind.n_regressions()];
        spec
    }

    pub fn with_random_effects(mut self, structure: RandomEffectsStructure) -> Self {
        self.random_effects = structure;
        self.quadrature_points = structure.default_quadrature();
        self
    }

    pub fn with_quadrature(mut self, n: usize) -> Self {
        self.quadrature_points = n;
        self
    }

    pub fn with_covariates(mut self, covariates: Vec<Vec<CovariateKind>>) -> Self {
        self.covariates = covariates;
        self
    }

    pub fn design_width(&self, regression: usize) -> usize {
        self.covariates[regression].iter().map(|k| k.width()).sum()
    }

    pub fn column_names(&self, regression: usize) -> Vec<&'static str> {
        self.covariates[regression]
            .iter()
            .flat_map(|k| k.column_names())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.covariates.len() != self.kind.n_regressions() {
            return Err(Error::Config(format!(
                "{} model needs {} covariate lists, got {}",
                self.kind,
                self.kind.n_regressions(),
                self.covariates.len()
            )));
        }
        if !(1..=100).contains(&self.quadrature_points) {
            return Err(Error::Config(format!(
                "quadrature points must be in 1..=100, got {}",
                self.quadrature_points
            )));
        }
        for (r, list) in self.covariates.iter().enumerate() {
            let mut seen = list.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != list.len() {
                return Err(Error::Config(format!(
                    "duplicate covariate in regression {}",
                    self.kind.regression_labels()[r]
                )));
            }
        }
        Ok(())
    }
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::six_state()
    }
}
