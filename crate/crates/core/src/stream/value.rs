use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

const NANOS_PER_SEC: i64 = 1_000_000_000;

/// Scalar kind carried by a stream. Fixed per stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    Int,
    Float,
    Bool,
}

impl Kind {
    pub fn is_numeric(self) -> bool {
        matches!(self, Kind::Int | Kind::Float)
    }

    /// Common kind of two operands, promoting `Int` to `Float` when mixed.
    pub fn unify(self, other: Kind) -> Option<Kind> {
        match (self, other) {
            (a, b) if a == b => Some(a),
            (Kind::Int, Kind::Float) | (Kind::Float, Kind::Int) => Some(Kind::Float),
            _ => None,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Int => "Int",
            Kind::Float => "Float",
            Kind::Bool => "Bool",
        })
    }
}

/// A scalar stream value.
///
/// Equality is structural: floats compare by bit pattern so that traces
/// containing `NaN` still compare equal to themselves. Use [`Value::num_eq`]
/// for the IEEE comparison the DSL `==` operator performs.
#[derive(Debug, Clone, Copy)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Value {
    pub fn kind(&self) -> Kind {
        match self {
            Value::Int(_) => Kind::Int,
            Value::Float(_) => Kind::Float,
            Value::Bool(_) => Kind::Bool,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(i) => Some(i as f64),
            Value::Float(x) => Some(x),
            Value::Bool(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    /// Converts to `kind`, allowing only the `Int -> Float` widening.
    pub fn coerce(self, kind: Kind) -> Option<Value> {
        match (self, kind) {
            (v, k) if v.kind() == k => Some(v),
            (Value::Int(i), Kind::Float) => Some(Value::Float(i as f64)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            // Debug formatting always keeps a fractional part or exponent,
            // so the kind survives a round trip.
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid value literal `{0}`")]
pub struct ParseValueError(pub String);

impl FromStr for Value {
    type Err = ParseValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "true" => return Ok(Value::Bool(true)),
            "false" => return Ok(Value::Bool(false)),
            _ => {}
        }
        if let Ok(i) = s.parse::<i64>() {
            return Ok(Value::Int(i));
        }
        if s.is_empty() || !s.bytes().any(|b| b.is_ascii_digit() || b == b'N' || b == b'i') {
            return Err(ParseValueError(s.to_string()));
        }
        s.parse::<f64>()
            .map(Value::Float)
            .map_err(|_| ParseValueError(s.to_string()))
    }
}

/// Non-negative point in time, stored as integer nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(i64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid timestamp `{0}`")]
pub struct ParseTimestampError(pub String);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub fn from_nanos(ns: i64) -> Option<Timestamp> {
        (ns >= 0).then_some(Timestamp(ns))
    }

    pub fn from_secs(s: i64) -> Option<Timestamp> {
        s.checked_mul(NANOS_PER_SEC).and_then(Timestamp::from_nanos)
    }

    /// Rounds a floating-point second count to the nearest nanosecond.
    pub fn from_secs_f64(s: f64) -> Option<Timestamp> {
        if !s.is_finite() || s < 0.0 || s > (i64::MAX / NANOS_PER_SEC) as f64 {
            return None;
        }
        Timestamp::from_nanos((s * NANOS_PER_SEC as f64).round() as i64)
    }

    pub fn nanos(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / NANOS_PER_SEC as f64
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let secs = self.0 / NANOS_PER_SEC;
        let frac = self.0 % NANOS_PER_SEC;
        if frac == 0 {
            write!(f, "{secs}")
        } else {
            let digits = format!("{frac:09}");
            write!(f, "{secs}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl FromStr for Timestamp {
    type Err = ParseTimestampError;

    /// Parses decimal seconds exactly (up to nanosecond precision).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTimestampError(s.to_string());
        let s = s.trim();
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        if frac.len() > 9 || !frac.bytes().all(|b| b.is_ascii_digit()) || (s.ends_with('.')) {
            return Err(err());
        }
        let whole: i64 = whole.parse().map_err(|_| err())?;
        let mut frac_ns: i64 = 0;
        if !frac.is_empty() {
            frac_ns = format!("{frac:0<9}").parse().map_err(|_| err())?;
        }
        whole
            .checked_mul(NANOS_PER_SEC)
            .and_then(|w| w.checked_add(frac_ns))
            .and_then(Timestamp::from_nanos)
            .ok_or_else(err)
    }
}
