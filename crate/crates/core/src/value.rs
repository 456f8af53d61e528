use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// A mean or sum that is either exact or floating.
///
/// Exact values serialize as decimal strings `"a/b"` so that rationals survive
/// a JSON round trip; floating values serialize as JSON numbers.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Approx(f64),
}

impl Value {
    pub fn zero(exact: bool) -> Self {
        if exact {
            Self::Exact(BigRational::zero())
        } else {
            Self::Approx(0.0)
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Self::Approx(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Self::Exact(r) => Some(r),
            Self::Approx(_) => None,
        }
    }

    pub fn add(&self, other: &Value) -> Value {
        match (self, other) {
            (Self::Exact(a), Self::Exact(b)) => Self::Exact(a + b),
            _ => Self::Approx(self.to_f64() + other.to_f64()),
        }
    }

    pub fn sub(&self, other: &Value) -> Value {
        match (self, other) {
            (Self::Exact(a), Self::Exact(b)) => Self::Exact(a - b),
            _ => Self::Approx(self.to_f64() - other.to_f64()),
        }
    }

    pub fn scale(&self, factor: &BigRational) -> Value {
        match self {
            Self::Exact(a) => Self::Exact(a * factor),
            Self::Approx(x) => Self::Approx(x * factor.to_f64().unwrap_or(f64::NAN)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Exact(a) => a.is_zero(),
            Self::Approx(x) => *x == 0.0,
        }
    }

    /// Sign test: exact values compare to zero exactly; floating values allow
    /// `-rel_tol * magnitude`.
    pub fn is_nonnegative(&self, rel_tol: f64, magnitude: f64) -> bool {
        match self {
            Self::Exact(a) => !a.is_negative(),
            Self::Approx(x) => *x >= -rel_tol * magnitude.abs().max(1.0),
        }
    }

    pub fn exact_int(n: impl Into<BigInt>) -> Self {
        Self::Exact(BigRational::from_integer(n.into()))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exact(r) => write!(f, "{r}"),
            Self::Approx(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Exact(r) => serializer.serialize_str(&r.to_string()),
            Self::Approx(x) if x.is_finite() => serializer.serialize_f64(*x),
            Self::Approx(x) => serializer.serialize_str(&x.to_string()),
        }
    }
}
