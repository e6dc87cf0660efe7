use super::spec::ModelSpec;
use super::states::ModelKind;
use crate::error::{Error, Result};

/// Map from the unconstrained optimization scale to the reporting scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    /// Variance components, stored as log variance.
    Exp,
    /// Correlation, stored as atanh.
    Tanh,
    /// Mixture probability, stored as logit.
    Logistic,
}

impl Transform {
    pub fn forward(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Exp => x.exp(),
            Transform::Tanh => x.tanh(),
            Transform::Logistic => logistic(x),
        }
    }

    pub fn inverse(self, y: f64) -> f64 {
        match self {
            Transform::Identity => y,
            Transform::Exp => y.ln(),
            Transform::Tanh => y.atanh(),
            Transform::Logistic => (y / (1.0 - y)).ln(),
        }
    }

    /// d forward / dx, for delta-method standard errors.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Transform::Identity => 1.0,
            Transform::Exp => x.exp(),
            Transform::Tanh => 1.0 - x.tanh().powi(2),
            Transform::Logistic => {
                let p = logistic(x);
                p * (1.0 - p)
            }
        }
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Name, reporting group and transform of one entry of the flat parameter
/// vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamInfo {
    pub name: String,
    /// Regression label the parameter belongs to, or empty for variance
    /// components and the mixture probability.
    pub group: String,
    pub transform: Transform,
}

impl ParamInfo {
    fn new(name: impl Into<String>, group: impl Into<String>, transform: Transform) -> Self {
        Self {
            name: name.into(),
            group: group.into(),
            transform,
        }
    }

    /// `group.name`, or just `name` for ungrouped parameters.
    pub fn key(&self) -> String {
        if self.group.is_empty() {
            self.name.clone()
        } else {
            format!("{}.{}", self.group, self.name)
        }
    }
}

/// One log-linear regression: `exp(log_baseline + coefficients . z + ...)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Regression {
    pub log_baseline: f64,
    pub coefficients: Vec<f64>,
}

impl Regression {
    pub fn new(log_baseline: f64, coefficients: Vec<f64>) -> Self {
        Self {
            log_baseline,
            coefficients,
        }
    }

    pub fn intercept(log_baseline: f64, width: usize) -> Self {
        Self::new(log_baseline, vec![0.0; width])
    }

    /// `log_baseline + coefficients . z`.
    #[inline]
    pub fn linear_predictor(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.coefficients.len());
        self.log_baseline
            + self
                .coefficients
                .iter()
                .zip(z)
                .map(|(b, x)| b * x)
                .sum::<f64>()
    }
}

/// Bivariate normal random-effects parameters on the unconstrained scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomEffectsParams {
    pub log_var_u: f64,
    pub log_var_v: f64,
    pub atanh_rho: f64,
}

impl RandomEffectsParams {
    pub fn from_natural(var_u: f64, var_v: f64, rho: f64) -> Self {
        Self {
            log_var_u: var_u.ln(),
            log_var_v: var_v.ln(),
            atanh_rho: rho.atanh(),
        }
    }

    pub fn var_u(&self) -> f64 {
        self.log_var_u.exp()
    }

    pub fn var_v(&self) -> f64 {
        self.log_var_v.exp()
    }

    pub fn rho(&self) -> f64 {
        self.atanh_rho.tanh()
    }
}

impl Default for RandomEffectsParams {
    fn default() -> Self {
        Self::from_natural(1.0, 1.0, 0.0)
    }
}

/// Parameters of the six-state intensity model.
#[derive(Debug, Clone, PartialEq)]
pub struct SixStateParams {
    /// Inactive -> active (lambda_12).
    pub activation: Regression,
    /// Active -> inactive (lambda_21).
    pub deactivation: Regression,
    /// Undamaged -> damaged from the inactive state (lambda_13).
    pub damage: Regression,
    /// lambda_34 = lambda_12 * exp(damaged_activation).
    pub damaged_activation: f64,
    /// lambda_43 = lambda_21 * exp(damaged_deactivation).
    pub damaged_deactivation: f64,
    /// lambda_24 = lambda_13 * exp(active_damage).
    pub active_damage: f64,
    /// lambda_56 = lambda_12 * exp(stayer_activation).
    pub stayer_activation: f64,
    /// lambda_65 = lambda_21 * exp(stayer_deactivation).
    pub stayer_deactivation: f64,
    /// Loading of the activation random effect on deactivation.
    pub alpha: f64,
    pub random_effects: RandomEffectsParams,
    pub logit_pi: f64,
}

impl SixStateParams {
    /// Every coefficient zero, baselines at the given log intensities.
    pub fn baseline(spec: &ModelSpec, log_baselines: [f64; 3]) -> Self {
        Self {
            activation: Regression::intercept(log_baselines[0], spec.design_width(0)),
            deactivation: Regression::intercept(log_baselines[1], spec.design_width(1)),
            damage: Regression::intercept(log_baselines[2], spec.design_width(2)),
            damaged_activation: 0.0,
            damaged_deactivation: 0.0,
            active_damage: 0.0,
            stayer_activation: 0.0,
            stayer_deactivation: 0.0,
            alpha: 0.0,
            random_effects: RandomEffectsParams::default(),
            logit_pi: 0.0,
        }
    }

    pub fn regressions(&self) -> [&Regression; 3] {
        [&self.activation, &self.deactivation, &self.damage]
    }

    pub fn pi(&self) -> f64 {
        logistic(self.logit_pi)
    }
}

/// Parameters of the five-state sojourn/jump model.
#[derive(Debug, Clone, PartialEq)]
pub struct FiveStateParams {
    /// Mean sojourn in the inactive state (mu_1); baseline is log mu_0.
    pub sojourn_inactive: Regression,
    /// Mean sojourn in the active state (mu_2).
    pub sojourn_active: Regression,
    /// Odds of jumping inactive -> damaged; baseline is log baseline odds.
    pub jump_inactive: Regression,
    /// Odds of jumping active -> damaged.
    pub jump_active: Regression,
    /// mu_4 = mu_1 * exp(stayer_inactive).
    pub stayer_inactive: f64,
    /// mu_5 = mu_2 * exp(stayer_active).
    pub stayer_active: f64,
    /// Loading of u on the active sojourn.
    pub alpha1: f64,
    /// Loading of v on the active jump odds.
    pub alpha2: f64,
    pub random_effects: RandomEffectsParams,
    pub logit_pi: f64,
}

impl FiveStateParams {
    pub fn baseline(spec: &ModelSpec, log_baselines: [f64; 4]) -> Self {
        Self {
            sojourn_inactive: Regression::intercept(log_baselines[0], spec.design_width(0)),
            sojourn_active: Regression::intercept(log_baselines[1], spec.design_width(1)),
            jump_inactive: Regression::intercept(log_baselines[2], spec.design_width(2)),
            jump_active: Regression::intercept(log_baselines[3], spec.design_width(3)),
            stayer_inactive: 0.0,
            stayer_active: 0.0,
            alpha1: 0.0,
            alpha2: 0.0,
            random_effects: RandomEffectsParams::default(),
            logit_pi: 0.0,
        }
    }

    pub fn regressions(&self) -> [&Regression; 4] {
        [
            &self.sojourn_inactive,
            &self.sojourn_active,
            &self.jump_inactive,
            &self.jump_active,
        ]
    }

    pub fn pi(&self) -> f64 {
        logistic(self.logit_pi)
    }
}

/// Full parameter vector of either model family.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Six(SixStateParams),
    Five(FiveStateParams),
}

impl Params {
    pub fn kind(&self) -> ModelKind {
        match self {
            Params::Six(_) => ModelKind::SixState,
            Params::Five(_) => ModelKind::FiveState,
        }
    }

    pub fn random_effects(&self) -> &RandomEffectsParams {
        match self {
            Params::Six(p) => &p.random_effects,
            Params::Five(p) => &p.random_effects,
        }
    }

    pub fn random_effects_mut(&mut self) -> &mut RandomEffectsParams {
        match self {
            Params::Six(p) => &mut p.random_effects,
            Params::Five(p) => &mut p.random_effects,
        }
    }

    pub fn logit_pi(&self) -> f64 {
        match self {
            Params::Six(p) => p.logit_pi,
            Params::Five(p) => p.logit_pi,
        }
    }

    pub fn set_logit_pi(&mut self, value: f64) {
        match self {
            Params::Six(p) => p.logit_pi = value,
            Params::Five(p) => p.logit_pi = value,
        }
    }

    pub fn pi(&self) -> f64 {
        logistic(self.logit_pi())
    }

    /// Flattened unconstrained vector in `layout(spec)` order.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let push_reg = |out: &mut Vec<f64>, r: &Regression| {
            out.push(r.log_baseline);
            out.extend_from_slice(&r.coefficients);
        };
        match self {
            Params::Six(p) => {
                for r in p.regressions() {
                    push_reg(&mut out, r);
                }
                out.extend_from_slice(&[
                    p.damaged_activation,
                    p.damaged_deactivation,
                    p.active_damage,
                    p.stayer_activation,
                    p.stayer_deactivation,
                    p.alpha,
                ]);
            }
            Params::Five(p) => {
                for r in p.regressions() {
                    push_reg(&mut out, r);
                }
                out.extend_from_slice(&[p.stayer_inactive, p.stayer_active, p.alpha1, p.alpha2]);
            }
        }
        let re = self.random_effects();
        out.extend_from_slice(&[re.log_var_u, re.log_var_v, re.atanh_rho, self.logit_pi()]);
        out
    }

    pub fn from_vec(spec: &ModelSpec, theta: &[f64]) -> Result<Self> {
        let expected = layout(spec).len();
        if theta.len() != expected {
            return Err(Error::Domain(format!(
                "parameter vector has length {}, model needs {expected}",
                theta.len()
            )));
        }
        let mut it = theta.iter().copied();
        let mut next = || it.next().expect("length checked");
        let reg = |width: usize, next: &mut dyn FnMut() -> f64| {
            let b = next();
            Regression::new(b, (0..width).map(|_| next()).collect())
        };
        let params = match spec.kind {
            ModelKind::SixState => {
                let activation = reg(spec.design_width(0), &mut next);
                let deactivation = reg(spec.design_width(1), &mut next);
                let damage = reg(spec.design_width(2), &mut next);
                Params::Six(SixStateParams {
                    activation,
                    deactivation,
                    damage,
                    damaged_activation: next(),
                    damaged_deactivation: next(),
                    active_damage: next(),
                    stayer_activation: next(),
                    stayer_deactivation: next(),
                    alpha: next(),
                    random_effects: RandomEffectsParams {
                        log_var_u: next(),
                        log_var_v: next(),
                        atanh_rho: next(),
                    },
                    logit_pi: next(),
                })
            }
            ModelKind::FiveState => {
                let sojourn_inactive = reg(spec.design_width(0), &mut next);
                let sojourn_active = reg(spec.design_width(1), &mut next);
                let jump_inactive = reg(spec.design_width(2), &mut next);
                let jump_active = reg(spec.design_width(3), &mut next);
                Params::Five(FiveStateParams {
                    sojourn_inactive,
                    sojourn_active,
                    jump_inactive,
                    jump_active,
                    stayer_inactive: next(),
                    stayer_active: next(),
                    alpha1: next(),
                    alpha2: next(),
                    random_effects: RandomEffectsParams {
                        log_var_u: next(),
                        log_var_v: next(),
                        atanh_rho: next(),
                    },
                    logit_pi: next(),
                })
            }
        };
        Ok(params)
    }

    /// Natural-scale values in layout order.
    pub fn natural_values(&self, spec: &ModelSpec) -> Vec<f64> {
        layout(spec)
            .iter()
            .zip(self.to_vec())
            .map(|(info, x)| info.transform.forward(x))
            .collect()
    }

    /// Set one parameter by its `key()` from a natural-scale value.
    pub fn set_natural(&mut self, spec: &ModelSpec, key: &str, value: f64) -> Result<()> {
        let infos = layout(spec);
        let idx = infos
            .iter()
            .position(|p| p.key() == key)
            .ok_or_else(|| Error::Config(format!("unknown parameter `{key}`")))?;
        let mut theta = self.to_vec();
        theta[idx] = infos[idx].transform.inverse(value);
        if !theta[idx].is_finite() {
            return Err(Error::Config(format!(
                "value {value} for `{key}` is outside the parameter's range"
            )));
        }
        *self = Params::from_vec(spec, &theta)?;
        Ok(())
    }
}

/// Names and transforms of the flat parameter vector for `spec`.
pub fn layout(spec: &ModelSpec) -> Vec<ParamInfo> {
    let labels = spec.kind.regression_labels();
    let baseline_name = |r: usize| match spec.kind {
        ModelKind::SixState => "log_lambda0",
        ModelKind::FiveState if r < 2 => "log_mu0",
        ModelKind::FiveState => "log_p0",
    };
    let mut out = Vec::new();
    for (r, label) in labels.iter().enumerate() {
        out.push(ParamInfo::new(baseline_name(r), *label, Transform::Identity));
        for col in spec.column_names(r) {
            out.push(ParamInfo::new(col, *label, Transform::Identity));
        }
    }
    match spec.kind {
        ModelKind::SixState => {
            out.push(ParamInfo::new("damaged_joint", labels[0], Transform::Identity));
            out.push(ParamInfo::new("damaged_joint", labels[1], Transform::Identity));
            out.push(ParamInfo::new("active_joint", labels[2], Transform::Identity));
            out.push(ParamInfo::new("stayer", labels[0], Transform::Identity));
            out.push(ParamInfo::new("stayer", labels[1], Transform::Identity));
            out.push(ParamInfo::new("alpha", "", Transform::Identity));
        }
        ModelKind::FiveState => {
            out.push(ParamInfo::new("stayer", labels[0], Transform::Identity));
            out.push(ParamInfo::new("stayer", labels[1], Transform::Identity));
            out.push(ParamInfo::new("alpha1", "", Transform::Identity));
            out.push(ParamInfo::new("alpha2", "", Transform::Identity));
        }
    }
    out.push(ParamInfo::new("var_u", "", Transform::Exp));
    out.push(ParamInfo::new("var_v", "", Transform::Exp));
    out.push(ParamInfo::new("rho", "", Transform::Tanh));
    out.push(ParamInfo::new("pi", "", Transform::Logistic));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_round_trip_six() {
        let spec = ModelSpec::six_state();
        let n = layout(&spec).len();
        let theta: Vec<f64> = (0..n).map(|i| i as f64 * 0.1 - 1.0).collect();
        let p = Params::from_vec(&spec, &theta).unwrap();
        assert_eq!(p.to_vec(), theta);
        // 3 baselines + 10 + 6 + 10 coefficients + 6 scalars + 4 variance/mixture
        assert_eq!(n, 3 + 10 + 6 + 10 + 6 + 4);
    }

    #[test]
    fn vector_round_trip_five() {
        let spec = ModelSpec::five_state();
        let n = layout(&spec).len();
        let theta: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let p = Params::from_vec(&spec, &theta).unwrap();
        assert_eq!(p.to_vec(), theta);
        assert!(Params::from_vec(&spec, &theta[1..]).is_err());
    }

    #[test]
    fn set_natural_uses_transform() {
        let spec = ModelSpec::without_covariates(ModelKind::SixState);
        let mut p = Params::Six(SixStateParams::baseline(&spec, [0.0; 3]));
        p.set_natural(&spec, "pi", 0.15).unwrap();
        p.set_natural(&spec, "var_u", 1.5).unwrap();
        p.set_natural(&spec, "rho", 0.2).unwrap();
        p.set_natural(&spec, "inactive_to_active.log_lambda0", -2.0).unwrap();
        assert!((p.pi() - 0.15).abs() < 1e-15);
        assert!((p.random_effects().var_u() - 1.5).abs() < 1e-14);
        assert!((p.random_effects().rho() - 0.2).abs() < 1e-15);
        assert!(p.set_natural(&spec, "pi", 1.5).is_err());
        assert!(p.set_natural(&spec, "nope", 1.0).is_err());
    }

    #[test]
    fn transforms_invert() {
        for t in [Transform::Identity, Transform::Exp, Transform::Tanh, Transform::Logistic] {
            for x in [-2.0, -0.3, 0.0, 0.7, 1.9] {
                assert!((t.inverse(t.forward(x)) - x).abs() < 1e-12, "{t:?} {x}");
                let h = 1e-6;
                let fd = (t.forward(x + h) - t.forward(x - h)) / (2.0 * h);
                assert!((fd - t.derivative(x)).abs() < 1e-8);
            }
        }
        assert_eq!(logistic(-f64::INFINITY), 0.0);
    }
}
