use super::params::{FiveStateParams, Regression, SixStateParams};
use crate::error::{Error, Result};

/// Mover rates of the four-state activity x damage process.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourStateRates {
    pub l12: f64,
    pub l13: f64,
    pub l21: f64,
    pub l24: f64,
    pub l34: f64,
    pub l43: f64,
}

impl FourStateRates {
    pub fn as_array(&self) -> [f64; 6] {
        [self.l12, self.l13, self.l21, self.l24, self.l34, self.l43]
    }

    /// Relabel states 1<->2 and 3<->4.
    pub fn swapped(&self) -> Self {
        Self {
            l12: self.l21,
            l13: self.l24,
            l21: self.l12,
            l24: self.l13,
            l34: self.l43,
            l43: self.l34,
        }
    }

    /// Generator matrix, rows in state order 1..4.
    pub fn generator(&self) -> Vec<Vec<f64>> {
        let r = self;
        vec![
            vec![-r.l12 - r.l13, r.l12, r.l13, 0.0],
            vec![r.l21, -r.l21 - r.l24, 0.0, r.l24],
            vec![0.0, 0.0, -r.l34, r.l34],
            vec![0.0, 0.0, r.l43, -r.l43],
        ]
    }
}

/// Mover rates of the three-state (inactive, active, damaged) process.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThreeStateRates {
    pub l12: f64,
    pub l13: f64,
    pub l21: f64,
    pub l23: f64,
}

impl ThreeStateRates {
    pub fn generator(&self) -> Vec<Vec<f64>> {
        let r = self;
        vec![
            vec![-r.l12 - r.l13, r.l12, r.l13],
            vec![r.l21, -r.l21 - r.l23, r.l23],
            vec![0.0, 0.0, 0.0],
        ]
    }
}

/// Rates of a reversible two-state process: first state -> second
/// (`forward`) and back (`backward`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoStateRates {
    pub forward: f64,
    pub backward: f64,
}

impl TwoStateRates {
    pub fn generator(&self) -> Vec<Vec<f64>> {
        vec![
            vec![-self.forward, self.forward],
            vec![self.backward, -self.backward],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixStateIntensities {
    pub mover: FourStateRates,
    /// lambda_56 (forward) and lambda_65 (backward).
    pub stayer: TwoStateRates,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveStateIntensities {
    pub mover: ThreeStateRates,
    /// lambda_45 (forward) and lambda_54 (backward).
    pub stayer: TwoStateRates,
}

/// Intensities of either model family for one joint in one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntensitySet {
    Six(SixStateIntensities),
    Five(FiveStateIntensities),
}

/// Mean sojourn times and jump probabilities of the five-state model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SojournJump {
    pub mu1: f64,
    pub mu2: f64,
    pub p13: f64,
    pub p23: f64,
    pub mu4: f64,
    pub mu5: f64,
}

fn check_finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::ParameterExplosion(format!("{name} = {x}")))
    }
}

fn check_covariates(z: &[&[f64]], regressions: &[&Regression]) -> Result<()> {
    if z.len() != regressions.len() {
        return Err(Error::Domain(format!(
            "expected {} covariate vectors, got {}",
            regressions.len(),
            z.len()
        )));
    }
    for (i, (zi, r)) in z.iter().zip(regressions).enumerate() {
        if zi.len() != r.coefficients.len() {
            return Err(Error::Domain(format!(
                "covariate vector {i} has length {}, regression expects {}",
                zi.len(),
                r.coefficients.len()
            )));
        }
    }
    Ok(())
}

/// Exponentiated linkage coefficients of the six-state model, shared by every
/// joint and quadrature node of a likelihood evaluation.
#[derive(Debug, Clone, Copy)]
pub struct SixStateLinks {
    damaged_activation: f64,
    damaged_deactivation: f64,
    active_damage: f64,
    stayer_activation: f64,
    stayer_deactivation: f64,
}

impl SixStateLinks {
    pub fn new(p: &SixStateParams) -> Self {
        Self {
            damaged_activation: p.damaged_activation.exp(),
            damaged_deactivation: p.damaged_deactivation.exp(),
            active_damage: p.active_damage.exp(),
            stayer_activation: p.stayer_activation.exp(),
            stayer_deactivation: p.stayer_deactivation.exp(),
        }
    }

    /// Mover rates from `l12`, `l21`, `l13` via the linkage identities.
    #[inline]
    pub fn mover(&self, l12: f64, l21: f64, l13: f64) -> FourStateRates {
        FourStateRates {
            l12,
            l13,
            l21,
            l24: l13 * self.active_damage,
            l34: l12 * self.damaged_activation,
            l43: l21 * self.damaged_deactivation,
        }
    }

    #[inline]
    pub fn stayer(&self, l12: f64, l21: f64) -> TwoStateRates {
        TwoStateRates {
            forward: l12 * self.stayer_activation,
            backward: l21 * self.stayer_deactivation,
        }
    }
}

/// Activation, deactivation and damage intensities (lambda_12, lambda_21,
/// lambda_13) for covariates `z` (one vector per regression) and random
/// effects `(u, v)`.
fn six_state_primary(z: &[&[f64]], u: f64, v: f64, p: &SixStateParams) -> Result<[f64; 3]> {
    check_covariates(z, &p.regressions())?;
    let l12 = (p.activation.linear_predictor(z[0]) + u).exp();
    let l21 = (p.deactivation.linear_predictor(z[1]) + p.alpha * u).exp();
    let l13 = (p.damage.linear_predictor(z[2]) + v).exp();
    Ok([
        check_finite("lambda_12", l12)?,
        check_finite("lambda_21", l21)?,
        check_finite("lambda_13", l13)?,
    ])
}

/// Mover intensities of the six-state model.
pub fn mover_six_state_intensities(
    z: &[&[f64]],
    u: f64,
    v: f64,
    params: &SixStateParams,
) -> Result<FourStateRates> {
    let [l12, l21, l13] = six_state_primary(z, u, v, params)?;
    let rates = SixStateLinks::new(params).mover(l12, l21, l13);
    for x in rates.as_array() {
        check_finite("mover intensity", x)?;
    }
    Ok(rates)
}

/// Stayer activity intensities (lambda_56, lambda_65).
pub fn stayer_intensities(z: &[&[f64]], u: f64, params: &SixStateParams) -> Result<TwoStateRates> {
    let [l12, l21, _] = six_state_primary(z, u, 0.0, params)?;
    let rates = SixStateLinks::new(params).stayer(l12, l21);
    check_finite("lambda_56", rates.forward)?;
    check_finite("lambda_65", rates.backward)?;
    Ok(rates)
}

/// Mover and stayer intensities of the six-state model together.
pub fn six_state_intensities(
    z: &[&[f64]],
    u: f64,
    v: f64,
    params: &SixStateParams,
) -> Result<SixStateIntensities> {
    Ok(SixStateIntensities {
        mover: mover_six_state_intensities(z, u, v, params)?,
        stayer: stayer_intensities(z, u, params)?,
    })
}

#[inline]
fn odds_to_prob(odds: f64) -> f64 {
    odds / (1.0 + odds)
}

/// Sojourn means and jump probabilities of the five-state model.
pub fn five_state_sojourn_params(
    z: &[&[f64]],
    u: f64,
    v: f64,
    params: &FiveStateParams,
) -> Result<SojournJump> {
    let p = params;
    check_covariates(z, &p.regressions())?;
    let mu1 = check_finite("mu_1", (p.sojourn_inactive.linear_predictor(z[0]) + u).exp())?;
    let mu2 = check_finite(
        "mu_2",
        (p.sojourn_active.linear_predictor(z[1]) + p.alpha1 * u).exp(),
    )?;
    let odds13 = check_finite("odds_13", (p.jump_inactive.linear_predictor(z[2]) + v).exp())?;
    let odds23 = check_finite(
        "odds_23",
        (p.jump_active.linear_predictor(z[3]) + p.alpha2 * v).exp(),
    )?;
    Ok(SojournJump {
        mu1,
        mu2,
        p13: odds_to_prob(odds13),
        p23: odds_to_prob(odds23),
        mu4: check_finite("mu_4", mu1 * p.stayer_inactive.exp())?,
        mu5: check_finite("mu_5", mu2 * p.stayer_active.exp())?,
    })
}

/// Map sojourn means and jump probabilities to transition intensities.
pub fn sojourn_to_intensities(s: &SojournJump) -> Result<FiveStateIntensities> {
    for (name, mu) in [("mu_1", s.mu1), ("mu_2", s.mu2), ("mu_4", s.mu4), ("mu_5", s.mu5)] {
        if !(mu > 0.0) {
            return Err(Error::Domain(format!("{name} must be positive, got {mu}")));
        }
    }
    for (name, p) in [("p_13", s.p13), ("p_23", s.p23)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("{name} must lie in [0, 1], got {p}")));
        }
    }
    Ok(FiveStateIntensities {
        mover: ThreeStateRates {
            l12: (1.0 - s.p13) / s.mu1,
            l13: s.p13 / s.mu1,
            l21: (1.0 - s.p23) / s.mu2,
            l23: s.p23 / s.mu2,
        },
        stayer: TwoStateRates {
            forward: 1.0 / s.mu4,
            backward: 1.0 / s.mu5,
        },
    })
}

/// Inverse of [`sojourn_to_intensities`].
pub fn intensities_to_sojourn(r: &FiveStateIntensities) -> Result<SojournJump> {
    let out1 = r.mover.l12 + r.mover.l13;
    let out2 = r.mover.l21 + r.mover.l23;
    for (name, x) in [
        ("total rate out of state 1", out1),
        ("total rate out of state 2", out2),
        ("lambda_45", r.stayer.forward),
        ("lambda_54", r.stayer.backward),
    ] {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("{name} must be positive, got {x}")));
        }
    }
    Ok(SojournJump {
        mu1: 1.0 / out1,
        mu2: 1.0 / out2,
        p13: r.mover.l13 / out1,
        p23: r.mover.l23 / out2,
        mu4: 1.0 / r.stayer.forward,
        mu5: 1.0 / r.stayer.backward,
    })
}
