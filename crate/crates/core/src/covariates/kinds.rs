use std::fmt;

/// A covariate that can enter a regression equation. `JointType` expands to
/// four dummy columns; every other kind is a single column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CovariateKind {
    /// Contralateral joint damaged at the start of the interval.
    OppositeDamaged,
    /// Number of damaged joints attained by the patient.
    AttainedDamagedCount,
    /// Adjusted mean activity of the joint up to the start of the interval.
    Ama,
    /// Dummies for MCP, PIP, DIP, thumb MCP (thumb PIP is the baseline).
    JointType,
    Sex,
    AgeAtOnset,
    ArthritisDuration,
}

pub const JOINT_TYPE_COLUMNS: [&str; 4] = [
    "joint_type_mcp",
    "joint_type_pip",
    "joint_type_dip",
    "joint_type_thumb_mcp",
];

impl CovariateKind {
    pub const ALL: [CovariateKind; 7] = [
        CovariateKind::OppositeDamaged,
        CovariateKind::AttainedDamagedCount,
        CovariateKind::Ama,
        CovariateKind::JointType,
        CovariateKind::Sex,
        CovariateKind::AgeAtOnset,
        CovariateKind::ArthritisDuration,
    ];

    pub fn width(self) -> usize {
        match self {
            CovariateKind::JointType => 4,
            _ => 1,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            CovariateKind::OppositeDamaged => "opposite_damaged",
            CovariateKind::AttainedDamagedCount => "attained_damaged_count",
            CovariateKind::Ama => "ama",
            CovariateKind::JointType => "joint_type",
            CovariateKind::Sex => "sex",
            CovariateKind::AgeAtOnset => "age_at_onset",
            CovariateKind::ArthritisDuration => "arthritis_duration",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.key() == key)
    }

    /// Names of the design columns this covariate contributes.
    pub fn column_names(self) -> Vec<&'static str> {
        match self {
            CovariateKind::JointType => JOINT_TYPE_COLUMNS.to_vec(),
            other => vec![other.key()],
        }
    }
}

impl fmt::Display for CovariateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}
