use std::fmt;

/// Which of the two model families is being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Four mover states (activity x damage) plus two stayer activity states,
    /// parameterized by transition intensities.
    SixState,
    /// Three mover states (inactive, active, damaged) plus two stayer states,
    /// parameterized by mean sojourn times and jump probabilities.
    FiveState,
}

impl ModelKind {
    pub fn n_regressions(self) -> usize {
        match self {
            ModelKind::SixState => 3,
            ModelKind::FiveState => 4,
        }
    }

    /// Labels of the regression equations, in parameter order.
    pub fn regression_labels(self) -> &'static [&'static str] {
        match self {
            ModelKind::SixState => &SIX_STATE_REGRESSIONS,
            ModelKind::FiveState => &FIVE_STATE_REGRESSIONS,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::SixState => "six",
            ModelKind::FiveState => "five",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "six" | "six_state" => Some(ModelKind::SixState),
            "five" | "five_state" => Some(ModelKind::FiveState),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::SixState => "six_state",
            ModelKind::FiveState => "five_state",
        })
    }
}

pub const SIX_STATE_REGRESSIONS: [&str; 3] =
    ["inactive_to_active", "active_to_inactive", "undamaged_to_damaged"];

pub const FIVE_STATE_REGRESSIONS: [&str; 4] = [
    "sojourn_inactive",
    "sojourn_active",
    "jump_inactive_to_damage",
    "jump_active_to_damage",
];

/// Latent mixture class of a patient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    Mover,
    Stayer,
}

/// Observed activity/damage flags of one joint at one visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct JointStatus {
    pub active: bool,
    pub damaged: bool,
}

impl JointStatus {
    pub const fn new(active: bool, damaged: bool) -> Self {
        Self { active, damaged }
    }
}

/// Six-state coding. Movers occupy 1-4, stayers 5-6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum SixStateCode {
    InactiveUndamaged = 1,
    ActiveUndamaged = 2,
    InactiveDamaged = 3,
    ActiveDamaged = 4,
    StayerInactive = 5,
    StayerActive = 6,
}

impl SixStateCode {
    /// `None` when a stayer is asked to occupy a damaged state.
    pub fn encode(status: JointStatus, hypothesis: Hypothesis) -> Option<Self> {
        use SixStateCode::*;
        Some(match (hypothesis, status.damaged, status.active) {
            (Hypothesis::Mover, false, false) => InactiveUndamaged,
            (Hypothesis::Mover, false, true) => ActiveUndamaged,
            (Hypothesis::Mover, true, false) => InactiveDamaged,
            (Hypothesis::Mover, true, true) => ActiveDamaged,
            (Hypothesis::Stayer, false, false) => StayerInactive,
            (Hypothesis::Stayer, false, true) => StayerActive,
            (Hypothesis::Stayer, true, _) => return None,
        })
    }

    pub fn decode(self) -> (JointStatus, Hypothesis) {
        use SixStateCode::*;
        match self {
            InactiveUndamaged => (JointStatus::new(false, false), Hypothesis::Mover),
            ActiveUndamaged => (JointStatus::new(true, false), Hypothesis::Mover),
            InactiveDamaged => (JointStatus::new(false, true), Hypothesis::Mover),
            ActiveDamaged => (JointStatus::new(true, true), Hypothesis::Mover),
            StayerInactive => (JointStatus::new(false, false), Hypothesis::Stayer),
            StayerActive => (JointStatus::new(true, false), Hypothesis::Stayer),
        }
    }

    pub fn number(self) -> u8 {
        self as u8
    }

    /// Zero-based row/column within the kernel of the sub-process the state
    /// belongs to (4-state for movers, 2-state for stayers).
    pub fn kernel_index(self) -> usize {
        match self.number() {
            n @ 1..=4 => (n - 1) as usize,
            n => (n - 5) as usize,
        }
    }
}

/// Five-state coding. Movers occupy 1-3 (damage absorbs regardless of
/// activity), stayers 4-5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FiveStateCode {
    Inactive = 1,
    Active = 2,
    Damaged = 3,
    StayerInactive = 4,
    StayerActive = 5,
}

impl FiveStateCode {
    pub fn encode(status: JointStatus, hypothesis: Hypothesis) -> Option<Self> {
        use FiveStateCode::*;
        Some(match (hypothesis, status.damaged, status.active) {
            (Hypothesis::Mover, false, false) => Inactive,
            (Hypothesis::Mover, false, true) => Active,
            (Hypothesis::Mover, true, _) => Damaged,
            (Hypothesis::Stayer, false, false) => StayerInactive,
            (Hypothesis::Stayer, false, true) => StayerActive,
            (Hypothesis::Stayer, true, _) => return None,
        })
    }

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn kernel_index(self) -> usize {
        match self.number() {
            n @ 1..=3 => (n - 1) as usize,
            n => (n - 4) as usize,
        }
    }
}

/// Zero-based index into the observed 4x4 (activity x damage) table:
/// 0 = inactive/undamaged, 1 = active/undamaged, 2 = inactive/damaged,
/// 3 = active/damaged.
pub fn observed_index(status: JointStatus) -> usize {
    (status.active as usize) + 2 * (status.damaged as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_status() -> [JointStatus; 4] {
        [
            JointStatus::new(false, false),
            JointStatus::new(true, false),
            JointStatus::new(false, true),
            JointStatus::new(true, true),
        ]
    }

    #[test]
    fn six_state_round_trip() {
        for s in all_status() {
            for h in [Hypothesis::Mover, Hypothesis::Stayer] {
                match SixStateCode::encode(s, h) {
                    Some(code) => assert_eq!(code.decode(), (s, h)),
                    None => assert!(h == Hypothesis::Stayer && s.damaged),
                }
            }
        }
    }

    #[test]
    fn stayers_never_damaged() {
        for s in all_status().into_iter().filter(|s| s.damaged) {
            assert!(SixStateCode::encode(s, Hypothesis::Stayer).is_none());
            assert!(FiveStateCode::encode(s, Hypothesis::Stayer).is_none());
        }
    }

    #[test]
    fn kernel_indices() {
        assert_eq!(SixStateCode::ActiveDamaged.kernel_index(), 3);
        assert_eq!(SixStateCode::StayerActive.kernel_index(), 1);
        assert_eq!(FiveStateCode::Damaged.kernel_index(), 2);
        assert_eq!(FiveStateCode::StayerInactive.kernel_index(), 0);
        assert_eq!(
            FiveStateCode::encode(JointStatus::new(true, true), Hypothesis::Mover),
            Some(FiveStateCode::Damaged)
        );
    }
}
