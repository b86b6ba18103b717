use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An element of the max-plus semiring.
///
/// `Bottom` is the additive identity (the role played by negative infinity);
/// it is kept distinct from `f64::NEG_INFINITY` so that undefined operations
/// surface as errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TropicalValue {
    Bottom,
    Finite(f64),
}

impl TropicalValue {
    /// Multiplicative identity.
    pub const ONE: TropicalValue = TropicalValue::Finite(0.0);

    pub fn finite(self) -> Option<f64> {
        match self {
            TropicalValue::Bottom => None,
            TropicalValue::Finite(v) => Some(v),
        }
    }

    pub fn is_bottom(self) -> bool {
        matches!(self, TropicalValue::Bottom)
    }
}

impl From<f64> for TropicalValue {
    fn from(v: f64) -> Self {
        TropicalValue::Finite(v)
    }
}

impl PartialOrd for TropicalValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (TropicalValue::Bottom, TropicalValue::Bottom) => Some(Ordering::Equal),
            (TropicalValue::Bottom, _) => Some(Ordering::Less),
            (_, TropicalValue::Bottom) => Some(Ordering::Greater),
            (TropicalValue::Finite(a), TropicalValue::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for TropicalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TropicalValue::Bottom => f.write_str("bottom"),
            TropicalValue::Finite(v) => write!(f, "{v}"),
        }
    }
}

/// `a ⊕ b = max(a, b)`.
pub fn trop_add(a: TropicalValue, b: TropicalValue) -> TropicalValue {
    match (a, b) {
        (TropicalValue::Bottom, x) | (x, TropicalValue::Bottom) => x,
        (TropicalValue::Finite(x), TropicalValue::Finite(y)) => TropicalValue::Finite(x.max(y)),
    }
}

/// `a ⊙ b = a + b`, with bottom absorbing.
pub fn trop_mul(a: TropicalValue, b: TropicalValue) -> TropicalValue {
    match (a, b) {
        (TropicalValue::Finite(x), TropicalValue::Finite(y)) => TropicalValue::Finite(x + y),
        _ => TropicalValue::Bottom,
    }
}

/// Tropical power `a^{⊙b}`.
///
/// For finite `a` both sign branches of the definition reduce to the
/// ordinary product `a·b`.
pub fn trop_pow(a: TropicalValue, b: i64) -> Result<TropicalValue> {
    match a {
        TropicalValue::Finite(x) => Ok(TropicalValue::Finite(x * b as f64)),
        TropicalValue::Bottom => match b.cmp(&0) {
            Ordering::Greater => Ok(TropicalValue::Bottom),
            Ordering::Equal => Ok(TropicalValue::ONE),
            Ordering::Less => Err(Error::UndefinedPower(b)),
        },
    }
}

/// Tropical division `a ⊘ b = a − b`. Dividing by bottom is undefined.
pub fn trop_div(a: TropicalValue, b: TropicalValue) -> Result<TropicalValue> {
    match (a, b) {
        (_, TropicalValue::Bottom) => Err(Error::DivisionByBottom),
        (TropicalValue::Bottom, _) => Ok(TropicalValue::Bottom),
        (TropicalValue::Finite(x), TropicalValue::Finite(y)) => Ok(TropicalValue::Finite(x - y)),
    }
}

impl Serialize for TropicalValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TropicalValue::Bottom => serializer.serialize_str("bottom"),
            TropicalValue::Finite(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for TropicalValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct TropicalVisitor;

        impl Visitor<'_> for TropicalVisitor {
            type Value = TropicalValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a finite number or the string \"bottom\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                if v.is_finite() {
                    Ok(TropicalValue::Finite(v))
                } else {
                    Err(E::custom("non-finite number; use \"bottom\""))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                Ok(TropicalValue::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                Ok(TropicalValue::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                if v == "bottom" {
                    Ok(TropicalValue::Bottom)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        deserializer.deserialize_any(TropicalVisitor)
    }
}
