//! Named behavioral modes and their weight sets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{PlannerError, WeightSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "NR")]
    NominalRacing,
    #[serde(rename = "AG")]
    Aggressive,
    #[serde(rename = "CD")]
    CloseDriving,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::NominalRacing, Mode::Aggressive, Mode::CloseDriving];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Mode> {
        Self::ALL.get(i).copied()
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Mode::NominalRacing => "NR",
            Mode::Aggressive => "AG",
            Mode::CloseDriving => "CD",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Mode {
    type Err = PlannerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "NR" | "NOMINAL" | "NOMINAL_RACING" => Ok(Mode::NominalRacing),
            "AG" | "AGGRESSIVE" => Ok(Mode::Aggressive),
            "CD" | "CLOSE" | "CLOSE_DRIVING" => Ok(Mode::CloseDriving),
            _ => Err(PlannerError::InvalidConfig(format!(
                "unknown mode `{s}` (expected NR, AG or CD)"
            ))),
        }
    }
}

/// The three weight sets, one per mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightLibrary {
    #[serde(rename = "NR")]
    pub nominal_racing: WeightSet,
    #[serde(rename = "AG")]
    pub aggressive: WeightSet,
    #[serde(rename = "CD")]
    pub close_driving: WeightSet,
}

impl Default for WeightLibrary {
    fn default() -> Self {
        Self {
            nominal_racing: WeightSet::NOMINAL_RACING,
            aggressive: WeightSet::AGGRESSIVE,
            close_driving: WeightSet::CLOSE_DRIVING,
        }
    }
}

impl WeightLibrary {
    pub fn get(&self, mode: Mode) -> &WeightSet {
        match mode {
            Mode::NominalRacing => &self.nominal_racing,
            Mode::Aggressive => &self.aggressive,
            Mode::CloseDriving => &self.close_driving,
        }
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        Mode::ALL.iter().try_for_each(|m| self.get(*m).validate())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.short_name().parse::<Mode>().unwrap(), m);
            assert_eq!(Mode::from_index(m.index()), Some(m));
        }
        assert!("XX".parse::<Mode>().is_err());
    }

    #[test]
    fn library_serializes_by_short_name() {
        let text = toml::to_string(&WeightLibrary::default()).unwrap();
        assert!(text.contains("[NR]") && text.contains("[CD]"));
        let back: WeightLibrary = toml::from_str(&text).unwrap();
        assert_eq!(back, WeightLibrary::default());
    }
}
