//! Truth values over `[0; 1] ∪ {NE}`.
//!
//! `NE` ("not evaluated yet") marks an expression whose inputs are missing
//! from working memory. Conjunction and disjunction follow strong-Kleene
//! rules: a definite `0` dominates `and`, a definite `1` dominates `or`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ValueError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruthValue {
    Known(f64),
    NotEvaluated,
}

/// Logical connectives accepted by [`truth_combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicOp {
    And,
    Or,
    Not,
}

impl TruthValue {
    pub const TRUE: TruthValue = TruthValue::Known(1.0);
    pub const FALSE: TruthValue = TruthValue::Known(0.0);
    pub const NE: TruthValue = TruthValue::NotEvaluated;

    /// Builds a known truth value, rejecting anything outside `[0; 1]`.
    pub fn new(x: f64) -> Result<Self, ValueError> {
        if (0.0..=1.0).contains(&x) {
            Ok(TruthValue::Known(x))
        } else {
            Err(ValueError::TruthOutOfRange(x))
        }
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            Self::TRUE
        } else {
            Self::FALSE
        }
    }

    pub fn known(self) -> Option<f64> {
        match self {
            TruthValue::Known(x) => Some(x),
            TruthValue::NotEvaluated => None,
        }
    }

    pub fn is_ne(self) -> bool {
        matches!(self, TruthValue::NotEvaluated)
    }

    /// True iff the value is known and reaches `threshold`. `NE` never does.
    pub fn at_least(self, threshold: f64) -> bool {
        matches!(self, TruthValue::Known(x) if x >= threshold)
    }

    pub fn and(self, other: TruthValue) -> TruthValue {
        match (self, other) {
            (TruthValue::Known(0.0), _) | (_, TruthValue::Known(0.0)) => Self::FALSE,
            (TruthValue::Known(a), TruthValue::Known(b)) => TruthValue::Known(a.min(b)),
            _ => TruthValue::NotEvaluated,
        }
    }

    pub fn or(self, other: TruthValue) -> TruthValue {
        match (self, other) {
            (TruthValue::Known(1.0), _) | (_, TruthValue::Known(1.0)) => Self::TRUE,
            (TruthValue::Known(a), TruthValue::Known(b)) => TruthValue::Known(a.max(b)),
            _ => TruthValue::NotEvaluated,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> TruthValue {
        match self {
            TruthValue::Known(a) => TruthValue::Known(1.0 - a),
            TruthValue::NotEvaluated => TruthValue::NotEvaluated,
        }
    }
}

/// Applies a connective. `rhs` must be present exactly for the binary ops.
pub fn truth_combine(op: LogicOp, lhs: TruthValue, rhs: Option<TruthValue>) -> Result<TruthValue, ValueError> {
    match (op, rhs) {
        (LogicOp::And, Some(r)) => Ok(lhs.and(r)),
        (LogicOp::Or, Some(r)) => Ok(lhs.or(r)),
        (LogicOp::Not, None) => Ok(lhs.not()),
        _ => Err(ValueError::Arity(op)),
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruthValue::Known(x) => write!(f, "{x}"),
            TruthValue::NotEvaluated => f.write_str("NE"),
        }
    }
}

impl Serialize for TruthValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TruthValue::Known(x) => s.serialize_f64(*x),
            TruthValue::NotEvaluated => s.serialize_str("NE"),
        }
    }
}

impl<'de> Deserialize<'de> for TruthValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Mark(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => TruthValue::new(x).map_err(serde::de::Error::custom),
            Raw::Mark(m) if m == "NE" => Ok(TruthValue::NotEvaluated),
            Raw::Mark(m) => Err(serde::de::Error::custom(format!("bad truth value {m:?}"))),
        }
    }
}
