use crate::error::{Error, Result};
use crate::model::{
    FiveStateParams, ModelKind, ModelSpec, Params, RandomEffectsParams, Regression, SixStateParams,
};

/// Visit schedule: lognormal gaps capped to `[min_gap, max_gap]`, visit
/// count uniform on `[min_visits, max_visits]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisitSchedule {
    pub median_gap: f64,
    /// Standard deviation of the log gap.
    pub gap_log_sd: f64,
    pub min_gap: f64,
    pub max_gap: f64,
    pub min_visits: usize,
    pub max_visits: usize,
}

impl Default for VisitSchedule {
    fn default() -> Self {
        Self {
            median_gap: 0.5,
            gap_log_sd: 1.0,
            min_gap: 0.1,
            max_gap: 3.0,
            min_visits: 5,
            max_visits: 20,
        }
    }
}

/// Distributions of the patient-level covariates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovariateGenerator {
    pub male_fraction: f64,
    pub age_onset_mean: f64,
    pub age_onset_sd: f64,
    /// Entry duration is gamma with this mean and standard deviation.
    pub duration_mean: f64,
    pub duration_sd: f64,
}

impl Default for CovariateGenerator {
    fn default() -> Self {
        Self {
            male_fraction: 0.55,
            age_onset_mean: 36.7,
            age_onset_sd: 13.3,
            duration_mean: 5.2,
            duration_sd: 7.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_patients: usize,
    pub seed: u64,
    /// Model family, random-effects structure and covariate layout of the
    /// generating model.
    pub spec: ModelSpec,
    pub truth: Params,
    pub schedule: VisitSchedule,
    pub covariates: CovariateGenerator,
    /// Probability that a joint starts active rather than inactive.
    pub initial_active_probability: f64,
    /// Keep every within-interval jump in the returned truth.
    pub record_paths: bool,
}

impl SimConfig {
    /// Intercept-only six-state truth with moderate rates.
    pub fn six_state_default(n_patients: usize, seed: u64) -> Self {
        let spec = ModelSpec::without_covariates(ModelKind::SixState);
        let mut p = SixStateParams::baseline(&spec, [(0.15f64).ln(), (0.6f64).ln(), (0.02f64).ln()]);
        p.damaged_activation = -0.3;
        p.damaged_deactivation = -0.2;
        p.active_damage = 1.0;
        p.stayer_activation = 0.8;
        p.stayer_deactivation = 0.5;
        p.alpha = -0.4;
        p.random_effects = RandomEffectsParams::from_natural(1.5, 2.0, 0.2);
        p.logit_pi = (0.15f64 / 0.85).ln();
        Self {
            n_patients,
            seed,
            spec,
            truth: Params::Six(p),
            schedule: VisitSchedule::default(),
            covariates: CovariateGenerator::default(),
            initial_active_probability: 0.0,
            record_paths: false,
        }
    }

    /// Intercept-only five-state truth: mean sojourns of 3 and 1 years, jump
    /// probabilities to damage of 0.05 and 0.15.
    pub fn five_state_default(n_patients: usize, seed: u64) -> Self {
        let spec = ModelSpec::without_covariates(ModelKind::FiveState);
        let logit = |p: f64| (p / (1.0 - p)).ln();
        let mut p = FiveStateParams::baseline(&spec, [3f64.ln(), 0.0, logit(0.05), logit(0.15)]);
        p.stayer_inactive = -1.0;
        p.stayer_active = -0.3;
        p.alpha1 = -0.3;
        p.alpha2 = 0.3;
        p.random_effects = RandomEffectsParams::from_natural(1.0, 1.0, 0.2);
        p.logit_pi = logit(0.15);
        Self {
            truth: Params::Five(p),
            spec,
            ..Self::six_state_default(n_patients, seed)
        }
    }

    /// The configured truth with every regression resized to `spec`'s
    /// covariate layout; baselines and scalars are kept, coefficients that
    /// do not fit are replaced by zeros.
    pub fn truth_for_spec(&self, spec: &ModelSpec) -> Result<Params> {
        if spec.kind != self.truth.kind() {
            return Err(Error::Config("truth parameters do not match the model family".into()));
        }
        let resize = |r: &Regression, w: usize| {
            if r.coefficients.len() == w {
                r.clone()
            } else {
                Regression::intercept(r.log_baseline, w)
            }
        };
        Ok(match &self.truth {
            Params::Six(p) => {
                let mut q = p.clone();
                q.activation = resize(&p.activation, spec.design_width(0));
                q.deactivation = resize(&p.deactivation, spec.design_width(1));
                q.damage = resize(&p.damage, spec.design_width(2));
                Params::Six(q)
            }
            Params::Five(p) => {
                let mut q = p.clone();
                q.sojourn_inactive = resize(&p.sojourn_inactive, spec.design_width(0));
                q.sojourn_active = resize(&p.sojourn_active, spec.design_width(1));
                q.jump_inactive = resize(&p.jump_inactive, spec.design_width(2));
                q.jump_active = resize(&p.jump_active, spec.design_width(3));
                Params::Five(q)
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.truth.kind() != self.spec.kind {
            return Err(Error::Config("truth parameters do not match the model family".into()));
        }
        let widths: Vec<usize> = match &self.truth {
            Params::Six(p) => p.regressions().iter().map(|r| r.coefficients.len()).collect(),
            Params::Five(p) => p.regressions().iter().map(|r| r.coefficients.len()).collect(),
        };
        for (r, w) in widths.iter().enumerate() {
            if *w != self.spec.design_width(r) {
                return Err(Error::Config(format!(
                    "truth regression {} has {w} coefficients, covariate layout needs {}",
                    self.spec.kind.regression_labels()[r],
                    self.spec.design_width(r)
                )));
            }
        }
        let s = &self.schedule;
        if !(s.median_gap > 0.0 && s.min_gap > 0.0 && s.min_gap <= s.max_gap && s.gap_log_sd >= 0.0) {
            return Err(Error::Config(format!("invalid visit gaps {s:?}")));
        }
        if s.min_visits < 2 || s.min_visits > s.max_visits {
            return Err(Error::Config(format!(
                "visit counts must satisfy 2 <= min <= max, got {}..{}",
                s.min_visits, s.max_visits
            )));
        }
        let c = &self.covariates;
        if !(0.0..=1.0).contains(&c.male_fraction) || c.duration_mean <= 0.0 || c.duration_sd <= 0.0 || c.age_onset_sd < 0.0 {
            return Err(Error::Config(format!("invalid covariate generator {c:?}")));
        }
        if !(0.0..=1.0).contains(&self.initial_active_probability) {
            return Err(Error::Config("initial active probability must be in [0, 1]".into()));
        }
        Ok(())
    }
}
