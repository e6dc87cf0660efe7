use std::fmt;

use crate::error::{Error, Result};

pub const JOINTS_PER_HAND: usize = 14;
pub const N_JOINTS: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub fn flip(self) -> Self {
        match self {
            Hand::Left => Hand::Right,
            Hand::Right => Hand::Left,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Hand::Left => "L",
            Hand::Right => "R",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    /// Metacarpophalangeal, fingers 2-5.
    Mcp,
    /// Proximal interphalangeal, fingers 2-5.
    Pip,
    /// Distal interphalangeal, fingers 2-5.
    Dip,
    ThumbMcp,
    /// Thumb interphalangeal; the baseline joint type.
    ThumbPip,
}

impl Site {
    pub fn code(self) -> &'static str {
        match self {
            Site::Mcp => "MCP",
            Site::Pip => "PIP",
            Site::Dip => "DIP",
            Site::ThumbMcp => "TMCP",
            Site::ThumbPip => "TPIP",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        Some(match s {
            "MCP" => Site::Mcp,
            "PIP" => Site::Pip,
            "DIP" => Site::Dip,
            "TMCP" => Site::ThumbMcp,
            "TPIP" => Site::ThumbPip,
            _ => return None,
        })
    }

    fn is_thumb(self) -> bool {
        matches!(self, Site::ThumbMcp | Site::ThumbPip)
    }
}

/// One of the 28 hand joints. Digit 1 is the thumb (sites `ThumbMcp`,
/// `ThumbPip`); digits 2-5 carry `Mcp`, `Pip` and `Dip`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointId {
    hand: Hand,
    digit: u8,
    site: Site,
}

impl JointId {
    pub fn new(hand: Hand, digit: u8, site: Site) -> Result<Self> {
        let valid = match digit {
            1 => site.is_thumb(),
            2..=5 => !site.is_thumb(),
            _ => false,
        };
        if !valid {
            return Err(Error::Domain(format!(
                "no joint at digit {digit} with site {}",
                site.code()
            )));
        }
        Ok(Self { hand, digit, site })
    }

    pub fn hand(self) -> Hand {
        self.hand
    }

    pub fn digit(self) -> u8 {
        self.digit
    }

    pub fn site(self) -> Site {
        self.site
    }

    /// Contralateral joint: same digit and site, other hand.
    pub fn opposite(self) -> Self {
        Self {
            hand: self.hand.flip(),
            ..self
        }
    }

    /// Dense index in 0..28; left hand first.
    pub fn index(self) -> usize {
        let within = match (self.digit, self.site) {
            (1, Site::ThumbMcp) => 0,
            (1, _) => 1,
            (d, s) => {
                let offset = match s {
                    Site::Mcp => 0,
                    Site::Pip => 1,
                    _ => 2,
                };
                2 + (d as usize - 2) * 3 + offset
            }
        };
        match self.hand {
            Hand::Left => within,
            Hand::Right => JOINTS_PER_HAND + within,
        }
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < N_JOINTS, "joint index {index} out of range");
        ALL_JOINTS[index]
    }

    pub fn all() -> &'static [JointId; N_JOINTS] {
        &ALL_JOINTS
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.hand.code(), self.digit, self.site.code())
    }
}

const fn joint(hand: Hand, digit: u8, site: Site) -> JointId {
    JointId { hand, digit, site }
}

macro_rules! hand_joints {
    ($h:expr) => {
        [
            joint($h, 1, Site::ThumbMcp),
            joint($h, 1, Site::ThumbPip),
            joint($h, 2, Site::Mcp),
            joint($h, 2, Site::Pip),
            joint($h, 2, Site::Dip),
            joint($h, 3, Site::Mcp),
            joint($h, 3, Site::Pip),
            joint($h, 3, Site::Dip),
            joint($h, 4, Site::Mcp),
            joint($h, 4, Site::Pip),
            joint($h, 4, Site::Dip),
            joint($h, 5, Site::Mcp),
            joint($h, 5, Site::Pip),
            joint($h, 5, Site::Dip),
        ]
    };
}

static ALL_JOINTS: [JointId; N_JOINTS] = {
    let l = hand_joints!(Hand::Left);
    let r = hand_joints!(Hand::Right);
    let mut out = [l[0]; N_JOINTS];
    let mut i = 0;
    while i < JOINTS_PER_HAND {
        out[i] = l[i];
        out[JOINTS_PER_HAND + i] = r[i];
        i += 1;
    }
    out
};

/// Joint-type dummies in the order MCP, PIP, DIP, thumb MCP; thumb PIP is
/// the all-zero baseline.
pub fn encode_joint_type(joint: JointId) -> [f64; 4] {
    match joint.site() {
        Site::Mcp => [1.0, 0.0, 0.0, 0.0],
        Site::Pip => [0.0, 1.0, 0.0, 0.0],
        Site::Dip => [0.0, 0.0, 1.0, 0.0],
        Site::ThumbMcp => [0.0, 0.0, 0.0, 1.0],
        Site::ThumbPip => [0.0; 4],
    }
}
