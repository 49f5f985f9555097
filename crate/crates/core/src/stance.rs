//! The five-point hawkish/dovish scale.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Monetary-policy stance of a piece of text, ordered from most dovish to
/// most hawkish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StanceClass {
    #[serde(rename = "dovish")]
    Dovish,
    #[serde(rename = "leaning dovish")]
    LeaningDovish,
    #[serde(rename = "neutral")]
    Neutral,
    #[serde(rename = "leaning hawkish")]
    LeaningHawkish,
    #[serde(rename = "hawkish")]
    Hawkish,
}

impl StanceClass {
    /// All classes in ascending (dovish to hawkish) order.
    pub const ALL: [StanceClass; 5] = [
        StanceClass::Dovish,
        StanceClass::LeaningDovish,
        StanceClass::Neutral,
        StanceClass::LeaningHawkish,
        StanceClass::Hawkish,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StanceClass::Dovish => "dovish",
            StanceClass::LeaningDovish => "leaning dovish",
            StanceClass::Neutral => "neutral",
            StanceClass::LeaningHawkish => "leaning hawkish",
            StanceClass::Hawkish => "hawkish",
        }
    }

    /// Position on the five-point scale, 1 (dovish) through 5 (hawkish).
    pub fn ordinal(self) -> u8 {
        match self {
            StanceClass::Dovish => 1,
            StanceClass::LeaningDovish => 2,
            StanceClass::Neutral => 3,
            StanceClass::LeaningHawkish => 4,
            StanceClass::Hawkish => 5,
        }
    }

    pub fn from_ordinal(n: u8) -> Option<StanceClass> {
        match n {
            1..=5 => Some(Self::ALL[usize::from(n - 1)]),
            _ => None,
        }
    }

    /// Mirror image on the scale: dovish <-> hawkish, leaning classes swap,
    /// neutral is fixed.
    pub fn mirror(self) -> StanceClass {
        Self::ALL[4 - usize::from(self.ordinal() - 1)]
    }
}

impl fmt::Display for StanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown stance class {0:?}")]
pub struct UnknownStance(pub String);

impl FromStr for StanceClass {
    type Err = UnknownStance;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| UnknownStance(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_order_matches_scale() {
        for w in StanceClass::ALL.windows(2) {
            assert!(w[0] < w[1]);
            assert_eq!(w[0].ordinal() + 1, w[1].ordinal());
        }
    }

    #[test]
    fn string_forms_round_trip() {
        for c in StanceClass::ALL {
            assert_eq!(c.as_str().parse::<StanceClass>().unwrap(), c);
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(json, format!("\"{}\"", c.as_str()));
        }
        assert!("Hawkish".parse::<StanceClass>().is_err());
        assert!("leaning-hawkish".parse::<StanceClass>().is_err());
    }

    #[test]
    fn mirror_is_an_involution() {
        assert_eq!(StanceClass::Dovish.mirror(), StanceClass::Hawkish);
        assert_eq!(StanceClass::LeaningHawkish.mirror(), StanceClass::LeaningDovish);
        assert_eq!(StanceClass::Neutral.mirror(), StanceClass::Neutral);
        for c in StanceClass::ALL {
            assert_eq!(c.mirror().mirror(), c);
        }
    }
}
