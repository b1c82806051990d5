//! Naturals extended with both infinities, used for heights, depths and dimensions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An element of `{-inf} + N + {inf}`, ordered in the evident way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtNat {
    NegInf,
    Finite(usize),
    Inf,
}

impl ExtNat {
    pub fn finite(self) -> Option<usize> {
        match self {
            ExtNat::Finite(n) => Some(n),
            _ => None,
        }
    }

    /// `-inf` maps to -1 and `inf` to `i64::MAX`; handy at the C boundary.
    pub fn to_i64(self) -> i64 {
        match self {
            ExtNat::NegInf => -1,
            ExtNat::Finite(n) => n as i64,
            ExtNat::Inf => i64::MAX,
        }
    }
}

impl From<usize> for ExtNat {
    fn from(n: usize) -> Self {
        ExtNat::Finite(n)
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::NegInf => write!(f, "-inf"),
            ExtNat::Finite(n) => write!(f, "{n}"),
            ExtNat::Inf => write!(f, "inf"),
        }
    }
}

impl FromStr for ExtNat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "-inf" | "-∞" => Ok(ExtNat::NegInf),
            "inf" | "∞" => Ok(ExtNat::Inf),
            other => other
                .parse::<usize>()
                .map(ExtNat::Finite)
                .map_err(|_| format!("expected -inf, inf or a natural number, got {other:?}")),
        }
    }
}

// Finite values serialize as JSON numbers, the infinities as the strings "-inf" / "inf".
impl Serialize for ExtNat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtNat::Finite(n) => serializer.serialize_u64(*n as u64),
            other => serializer.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for ExtNat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(u64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(n) => Ok(ExtNat::Finite(n as usize)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
