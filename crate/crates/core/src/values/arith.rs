//! Arithmetic over NEG-annotated values.
//!
//! Crisp operands use plain float arithmetic, inexact and set-valued operands
//! use endpoint interval arithmetic, and any fuzzy operand switches the whole
//! operation to alpha-cut evaluation of the extension principle.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::mf::MembershipFunction;
use super::value::{fuzzify, AdmissibleSet, NegContext, Payload, Value};
use super::ValueError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Endpoint interval arithmetic on closed intervals.
pub fn interval_op(op: ArithOp, a: (f64, f64), b: (f64, f64)) -> Result<(f64, f64), ValueError> {
    let hull = |c: [f64; 4]| {
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    Ok(match op {
        ArithOp::Add => (a.0 + b.0, a.1 + b.1),
        ArithOp::Sub => (a.0 - b.1, a.1 - b.0),
        ArithOp::Mul => hull([a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1]),
        ArithOp::Div => {
            if b.0 <= 0.0 && 0.0 <= b.1 {
                return Err(ValueError::UndefinedQuotient);
            }
            hull([a.0 / b.0, a.0 / b.1, a.1 / b.0, a.1 / b.1])
        }
    })
}

/// Applies `op` to two values, propagating NEG-factors. The result certainty
/// is the minimum of the operand certainties.
pub fn neg_arith(op: ArithOp, a: &Value, b: &Value, ctx: &NegContext<'_>) -> Result<Value, ValueError> {
    let a = resolve_term(a, ctx)?;
    let b = resolve_term(b, ctx)?;
    let certainty = a.certainty.min(b.certainty);
    let payload = match (&a.payload, &b.payload) {
        (Payload::Bool(_), _) | (_, Payload::Bool(_)) => return Err(ValueError::NonNumeric("boolean")),
        (Payload::Fuzzy(_), _) | (_, Payload::Fuzzy(_)) => Payload::Fuzzy(alpha_cut_op(op, &a, &b, ctx)?),
        (Payload::Number(x), Payload::Number(y)) => {
            if op == ArithOp::Div && *y == 0.0 {
                return Err(ValueError::UndefinedQuotient);
            }
            Payload::Number(match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => x / y,
            })
        }
        (Payload::Set(_), _) | (_, Payload::Set(_)) => set_op(op, &a.payload, &b.payload)?,
        _ => {
            let (lo, hi) = interval_op(op, as_interval(&a.payload), as_interval(&b.payload))?;
            Payload::Inexact { center: (lo + hi) / 2.0, half_width: (hi - lo) / 2.0 }
        }
    };
    Ok(Value { payload, certainty })
}

fn resolve_term(v: &Value, ctx: &NegContext<'_>) -> Result<Value, ValueError> {
    match &v.payload {
        Payload::Term(_) => Ok(fuzzify(v, ctx)?.value),
        _ => Ok(v.clone()),
    }
}

fn as_interval(p: &Payload) -> (f64, f64) {
    match p {
        Payload::Number(x) => (*x, *x),
        Payload::Inexact { center, half_width } => (center - half_width, center + half_width),
        Payload::Set(AdmissibleSet::Range(lo, hi)) => (*lo, *hi),
        _ => unreachable!("as_interval called on {}", p.kind()),
    }
}

/// Pieces of a set-valued operand: each element or the whole range.
fn pieces(p: &Payload) -> Vec<(f64, f64)> {
    match p {
        Payload::Set(AdmissibleSet::Finite(xs)) => xs.iter().map(|&x| (x, x)).collect(),
        other => vec![as_interval(other)],
    }
}

/// Image of the operation over admissible sets. Finite sets combined with
/// crisp values or other finite sets stay finite; anything involving a
/// range or an inexact value collapses to the hull range of the image.
fn set_op(op: ArithOp, a: &Payload, b: &Payload) -> Result<Payload, ValueError> {
    let mut results = Vec::new();
    for pa in pieces(a) {
        for pb in pieces(b) {
            results.push(interval_op(op, pa, pb)?);
        }
    }
    if results.iter().all(|r| r.0 == r.1) {
        let mut xs: Vec<f64> = results.into_iter().map(|r| r.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        Ok(Payload::Set(AdmissibleSet::Finite(xs)))
    } else {
        let lo = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let hi = results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        Ok(Payload::Set(AdmissibleSet::Range(lo, hi)))
    }
}

/// An operand as seen by alpha-cut arithmetic.
enum Cuts {
    Fixed(f64, f64),
    Fuzzy(MembershipFunction),
}

impl Cuts {
    fn of(v: &Value, ctx: &NegContext<'_>) -> Result<Self, ValueError> {
        Ok(match &v.payload {
            Payload::Number(x) => Cuts::Fixed(*x, *x),
            Payload::Set(AdmissibleSet::Range(lo, hi)) => Cuts::Fixed(*lo, *hi),
            Payload::Fuzzy(mf) => Cuts::Fuzzy(mf.clone()),
            Payload::Inexact { half_width, center } if *half_width == 0.0 => Cuts::Fixed(*center, *center),
            Payload::Inexact { .. } => match fuzzify(v, ctx)?.value.payload {
                Payload::Fuzzy(mf) => Cuts::Fuzzy(mf),
                _ => unreachable!(),
            },
            other => return Err(ValueError::NotFuzzifiable(other.kind())),
        })
    }

    fn height(&self) -> f64 {
        match self {
            Cuts::Fixed(..) => 1.0,
            Cuts::Fuzzy(mf) => mf.height(),
        }
    }

    fn cut(&self, alpha: f64) -> (f64, f64) {
        match self {
            Cuts::Fixed(lo, hi) => (*lo, *hi),
            Cuts::Fuzzy(mf) => mf.alpha_cut(alpha).expect("alpha bounded by height"),
        }
    }
}

/// Alpha levels used by the extension principle: `L` evenly spaced levels
/// from 0 up to `height`.
pub fn alpha_levels(levels: usize, height: f64) -> Vec<f64> {
    let n = levels.max(2);
    (0..n).map(|k| if k == n - 1 { height } else { height * (k as f64 / (n - 1) as f64) }).collect()
}

fn alpha_cut_op(op: ArithOp, a: &Value, b: &Value, ctx: &NegContext<'_>) -> Result<MembershipFunction, ValueError> {
    let ca = Cuts::of(a, ctx)?;
    let cb = Cuts::of(b, ctx)?;
    let height = ca.height().min(cb.height());
    let mut left = Vec::new();
    let mut right = Vec::new();
    for alpha in alpha_levels(ctx.alpha_levels, height) {
        let (lo, hi) = interval_op(op, ca.cut(alpha), cb.cut(alpha))?;
        left.push((lo, alpha));
        right.push((hi, alpha));
    }
    left.extend(right);
    MembershipFunction::from_unsorted_merge(left)
}
