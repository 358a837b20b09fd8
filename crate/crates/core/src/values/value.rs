//! Typed data annotated with NEG-factors, and the JSON value-literal format
//! shared by scenarios, traces and the session service.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value as Json};

use super::mf::MembershipFunction;
use super::ValueError;

/// Linguistic term name to membership function.
pub type TermTable = BTreeMap<String, MembershipFunction>;

/// Subdefinite value: known only up to a set of admissible numbers.
#[derive(Debug, Clone, PartialEq)]
pub enum AdmissibleSet {
    /// Sorted, deduplicated, non-empty.
    Finite(Vec<f64>),
    /// Closed range `[lo, hi]`, `lo <= hi`.
    Range(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Number(f64),
    /// A linguistic term or enumerated symbol.
    Term(String),
    Bool(bool),
    /// `center ± half_width`.
    Inexact {
        center: f64,
        half_width: f64,
    },
    Set(AdmissibleSet),
    Fuzzy(MembershipFunction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Value {
    pub payload: Payload,
    /// Certainty in `[0; 1]`.
    pub certainty: f64,
}

/// Knobs used when values are fuzzified during an operation.
#[derive(Debug, Clone, Copy)]
pub struct NegContext<'a> {
    pub terms: Option<&'a TermTable>,
    /// Number of alpha levels for extension-principle arithmetic (≥ 2).
    pub alpha_levels: usize,
    /// Absolute half-width of the triangle used to embed a crisp number.
    pub singleton_epsilon: f64,
}

impl Default for NegContext<'_> {
    fn default() -> Self {
        Self { terms: None, alpha_levels: 11, singleton_epsilon: 1e-6 }
    }
}

/// Outcome of [`fuzzify`]; `already_fuzzy` flags the no-op case.
#[derive(Debug, Clone, PartialEq)]
pub struct Fuzzified {
    pub value: Value,
    pub already_fuzzy: bool,
}

fn finite(x: f64, what: &str) -> Result<f64, ValueError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ValueError::InvalidValue(format!("{what} must be finite, got {x}")))
    }
}

impl Value {
    fn certain(payload: Payload) -> Self {
        Self { payload, certainty: 1.0 }
    }

    pub fn number(x: f64) -> Self {
        Self::certain(Payload::Number(x))
    }

    pub fn term(t: impl Into<String>) -> Self {
        Self::certain(Payload::Term(t.into()))
    }

    pub fn boolean(b: bool) -> Self {
        Self::certain(Payload::Bool(b))
    }

    pub fn inexact(center: f64, half_width: f64) -> Result<Self, ValueError> {
        finite(center, "center")?;
        if !(half_width >= 0.0 && half_width.is_finite()) {
            return Err(ValueError::InvalidValue(format!(
                "half-width must be finite and non-negative, got {half_width}"
            )));
        }
        Ok(Self::certain(Payload::Inexact { center, half_width }))
    }

    pub fn finite_set(mut xs: Vec<f64>) -> Result<Self, ValueError> {
        if xs.is_empty() {
            return Err(ValueError::InvalidValue("admissible set is empty".into()));
        }
        for &x in &xs {
            finite(x, "set element")?;
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        Ok(Self::certain(Payload::Set(AdmissibleSet::Finite(xs))))
    }

    pub fn range(lo: f64, hi: f64) -> Result<Self, ValueError> {
        finite(lo, "range bound")?;
        finite(hi, "range bound")?;
        if lo > hi {
            return Err(ValueError::InvalidValue(format!("empty range [{lo}, {hi}]")));
        }
        Ok(Self::certain(Payload::Set(AdmissibleSet::Range(lo, hi))))
    }

    pub fn fuzzy(mf: MembershipFunction) -> Self {
        Self::certain(Payload::Fuzzy(mf))
    }

    pub fn with_certainty(mut self, certainty: f64) -> Result<Self, ValueError> {
        if !(0.0..=1.0).contains(&certainty) {
            return Err(ValueError::CertaintyOutOfRange(certainty));
        }
        self.certainty = certainty;
        Ok(self)
    }

    pub fn is_fuzzy(&self) -> bool {
        matches!(self.payload, Payload::Fuzzy(_))
    }

    pub fn kind(&self) -> &'static str {
        self.payload.kind()
    }

    /// Two values carry the same datum, certainty aside.
    pub fn same_payload(&self, other: &Value) -> bool {
        self.payload == other.payload
    }

    /// JSON value literal. Certainty other than 1 wraps the bare literal as
    /// `{"value": <literal>, "cf": c}`.
    pub fn to_literal(&self) -> Json {
        let bare = match &self.payload {
            Payload::Number(x) => json!(x),
            Payload::Term(t) => json!(t),
            Payload::Bool(b) => json!(b),
            Payload::Inexact { center, half_width } => json!({ "inexact": [center, half_width] }),
            Payload::Set(AdmissibleSet::Finite(xs)) => json!({ "set": xs }),
            Payload::Set(AdmissibleSet::Range(lo, hi)) => json!({ "range": [lo, hi] }),
            Payload::Fuzzy(mf) => {
                let pts: Vec<[f64; 2]> = mf.points().iter().map(|&(x, m)| [x, m]).collect();
                json!({ "mf": pts })
            }
        };
        if self.certainty == 1.0 {
            bare
        } else {
            json!({ "value": bare, "cf": self.certainty })
        }
    }

    pub fn from_literal(lit: &Json) -> Result<Self, ValueError> {
        let bad = || ValueError::MalformedLiteral(lit.to_string());
        match lit {
            Json::Number(n) => Ok(Value::number(finite(n.as_f64().ok_or_else(bad)?, "number")?)),
            Json::String(s) => Ok(Value::term(s.clone())),
            Json::Bool(b) => Ok(Value::boolean(*b)),
            Json::Object(map) => Self::from_object(map).ok_or_else(bad)?,
            _ => Err(bad()),
        }
    }

    fn from_object(map: &Map<String, Json>) -> Option<Result<Self, ValueError>> {
        let nums =
            |v: &Json| -> Option<Vec<f64>> { v.as_array()?.iter().map(Json::as_f64).collect::<Option<Vec<_>>>() };
        if map.len() == 2 {
            let inner = map.get("value")?;
            let cf = map.get("cf")?.as_f64()?;
            return Some(Value::from_literal(inner).and_then(|v| v.with_certainty(cf)));
        }
        if map.len() != 1 {
            return None;
        }
        let (key, body) = map.iter().next()?;
        Some(match key.as_str() {
            "inexact" => match nums(body)?.as_slice() {
                [c, h] => Value::inexact(*c, *h),
                _ => return None,
            },
            "set" => Value::finite_set(nums(body)?),
            "range" => match nums(body)?.as_slice() {
                [lo, hi] => Value::range(*lo, *hi),
                _ => return None,
            },
            "mf" => {
                let pts = body
                    .as_array()?
                    .iter()
                    .map(|p| match nums(p)?.as_slice() {
                        [x, m] => Some((*x, *m)),
                        _ => None,
                    })
                    .collect::<Option<Vec<_>>>()?;
                MembershipFunction::new(pts).map(Value::fuzzy)
            }
            _ => return None,
        })
    }
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Number(_) => "number",
            Payload::Term(_) => "term",
            Payload::Bool(_) => "boolean",
            Payload::Inexact { .. } => "inexact",
            Payload::Set(AdmissibleSet::Finite(_)) => "set",
            Payload::Set(AdmissibleSet::Range(..)) => "range",
            Payload::Fuzzy(_) => "fuzzy",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_literal())
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_literal().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let lit = Json::deserialize(d)?;
        Value::from_literal(&lit).map_err(serde::de::Error::custom)
    }
}

/// Converts a crisp, inexact or linguistic value into a membership function.
///
/// Crisp `x` becomes the triangle `(x−ε, x, x+ε)`, inexact `(c, h)` the
/// triangle `(c−h, c, c+h)`, and a term its table entry. Certainty is kept.
pub fn fuzzify(v: &Value, ctx: &NegContext<'_>) -> Result<Fuzzified, ValueError> {
    let mf = match &v.payload {
        Payload::Fuzzy(_) => return Ok(Fuzzified { value: v.clone(), already_fuzzy: true }),
        Payload::Number(x) => {
            let eps = ctx.singleton_epsilon;
            MembershipFunction::triangle(x - eps, *x, x + eps)?
        }
        Payload::Inexact { center, half_width } => {
            MembershipFunction::triangle(center - half_width, *center, center + half_width)?
        }
        Payload::Term(t) => {
            ctx.terms.and_then(|table| table.get(t)).cloned().ok_or_else(|| ValueError::UnknownTerm(t.clone()))?
        }
        other => return Err(ValueError::NotFuzzifiable(other.kind())),
    };
    Ok(Fuzzified { value: Value { payload: Payload::Fuzzy(mf), certainty: v.certainty }, already_fuzzy: false })
}

/// Probabilistic sum of two certainty factors for parallel derivations.
pub fn combine_cf(cf1: f64, cf2: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&cf1) && (0.0..=1.0).contains(&cf2));
    cf1 + cf2 - cf1 * cf2
}
