//! Graded comparison predicates.
//!
//! * crisp vs crisp: 0 or 1;
//! * interval-like (inexact, range) and finite sets: the fraction of the
//!   operand measure (or element count) satisfying the predicate, taken over
//!   the product space when both sides are uncertain;
//! * membership functions: the possibility measure
//!   `sup { min(μa(x), μb(y)) : x op y }`.
//!
//! Certainty is never folded into the result.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::truth::TruthValue;
use super::value::{fuzzify, AdmissibleSet, NegContext, Payload, Value};
use super::ValueError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Gt,
    Lt,
    Eq,
    Ge,
    Le,
    Ne,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Gt, CmpOp::Lt, CmpOp::Eq, CmpOp::Ge, CmpOp::Le, CmpOp::Ne];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Ne => "!=",
        }
    }

    /// The operator with its operands swapped: `a op b ⇔ b op.flip() a`.
    pub fn flip(self) -> Self {
        match self {
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Le => CmpOp::Ge,
            other => other,
        }
    }

    pub fn holds<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            CmpOp::Gt => a > b,
            CmpOp::Lt => a < b,
            CmpOp::Eq => a == b,
            CmpOp::Ge => a >= b,
            CmpOp::Le => a <= b,
            CmpOp::Ne => a != b,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Numeric shape of an operand once terms are resolved.
enum Shape {
    Crisp(f64),
    /// `peaked` marks an inexact value, which fuzzifies to a triangle.
    Interval {
        lo: f64,
        hi: f64,
        peaked: bool,
    },
    Finite(Vec<f64>),
    Fuzzy(Pl),
}

pub fn neg_compare(op: CmpOp, a: &Value, b: &Value, ctx: &NegContext<'_>) -> Result<TruthValue, ValueError> {
    let incomparable = || ValueError::Incomparable { op, left: a.kind(), right: b.kind() };
    match (&a.payload, &b.payload) {
        (Payload::Bool(x), Payload::Bool(y)) => match op {
            CmpOp::Eq | CmpOp::Ne => Ok(TruthValue::from_bool(op.holds(x, y))),
            _ => Err(incomparable()),
        },
        (Payload::Bool(_), _) | (_, Payload::Bool(_)) => Err(incomparable()),
        (Payload::Term(x), Payload::Term(y)) if matches!(op, CmpOp::Eq | CmpOp::Ne) => {
            Ok(TruthValue::from_bool(op.holds(x, y)))
        }
        _ => {
            let sa = shape(a, ctx).map_err(|e| if ctx.terms.is_none() { incomparable() } else { e })?;
            let sb = shape(b, ctx).map_err(|e| if ctx.terms.is_none() { incomparable() } else { e })?;
            Ok(TruthValue::Known(graded(op, &sa, &sb).clamp(0.0, 1.0)))
        }
    }
}

fn shape(v: &Value, ctx: &NegContext<'_>) -> Result<Shape, ValueError> {
    Ok(match &v.payload {
        Payload::Number(x) => Shape::Crisp(*x),
        Payload::Inexact { center, half_width } if *half_width == 0.0 => Shape::Crisp(*center),
        Payload::Inexact { center, half_width } => {
            Shape::Interval { lo: center - half_width, hi: center + half_width, peaked: true }
        }
        Payload::Set(AdmissibleSet::Range(lo, hi)) if lo == hi => Shape::Crisp(*lo),
        Payload::Set(AdmissibleSet::Range(lo, hi)) => Shape::Interval { lo: *lo, hi: *hi, peaked: false },
        Payload::Set(AdmissibleSet::Finite(xs)) => Shape::Finite(xs.clone()),
        Payload::Fuzzy(mf) => Shape::Fuzzy(Pl::from_points(mf.points().to_vec())),
        Payload::Term(_) => match fuzzify(v, ctx)?.value.payload {
            Payload::Fuzzy(mf) => Shape::Fuzzy(Pl::from_points(mf.points().to_vec())),
            _ => unreachable!(),
        },
        Payload::Bool(_) => return Err(ValueError::NonNumeric("boolean")),
    })
}

fn graded(op: CmpOp, a: &Shape, b: &Shape) -> f64 {
    use Shape::*;
    match (a, b) {
        (Crisp(x), Crisp(y)) => bool_f(op.holds(x, y)),
        (Fuzzy(_), _) | (_, Fuzzy(_)) => possibility(op, a, b),
        (Interval { lo, hi, .. }, Crisp(c)) => interval_vs_point(op, *lo, *hi, *c),
        (Crisp(_), _) => graded(op.flip(), b, a),
        (Finite(xs), _) => xs.iter().map(|&x| graded(op, &Crisp(x), b)).sum::<f64>() / xs.len() as f64,
        (_, Finite(_)) => graded(op.flip(), b, a),
        (Interval { lo: a1, hi: a2, .. }, Interval { lo: b1, hi: b2, .. }) => {
            interval_vs_interval(op, (*a1, *a2), (*b1, *b2))
        }
    }
}

fn bool_f(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Fraction of the uniform measure on `[lo, hi]` (non-degenerate) where
/// `x op c` holds.
fn interval_vs_point(op: CmpOp, lo: f64, hi: f64, c: f64) -> f64 {
    let w = hi - lo;
    match op {
        CmpOp::Gt | CmpOp::Ge => ((hi - c) / w).clamp(0.0, 1.0),
        CmpOp::Lt | CmpOp::Le => ((c - lo) / w).clamp(0.0, 1.0),
        CmpOp::Eq => 0.0,
        CmpOp::Ne => 1.0,
    }
}

/// Measure of `{(x, y) ∈ A × B : x op y}` over the measure of `A × B`.
fn interval_vs_interval(op: CmpOp, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (b1, b2) = b;
    let wb = b2 - b1;
    // antiderivative of clamp(x - b1, 0, wb)
    let g = |x: f64| {
        if x <= b1 {
            0.0
        } else if x <= b2 {
            (x - b1) * (x - b1) / 2.0
        } else {
            wb * wb / 2.0 + wb * (x - b2)
        }
    };
    let greater = ((g(a.1) - g(a.0)) / ((a.1 - a.0) * wb)).clamp(0.0, 1.0);
    match op {
        CmpOp::Gt | CmpOp::Ge => greater,
        CmpOp::Lt | CmpOp::Le => 1.0 - greater,
        CmpOp::Eq => 0.0,
        CmpOp::Ne => 1.0,
    }
}

fn possibility(op: CmpOp, a: &Shape, b: &Shape) -> f64 {
    if let Shape::Finite(xs) = b {
        return xs.iter().map(|&x| possibility(op, a, &Shape::Crisp(x))).fold(0.0, f64::max);
    }
    if let Shape::Finite(xs) = a {
        return xs.iter().map(|&x| possibility(op, &Shape::Crisp(x), b)).fold(0.0, f64::max);
    }
    let pa = Pl::of_shape(a);
    let pb = Pl::of_shape(b);
    match op {
        CmpOp::Gt | CmpOp::Ge => sup_min(&pa.running_max_right(), &pb),
        CmpOp::Lt | CmpOp::Le => sup_min(&pa.running_max_left(), &pb),
        CmpOp::Eq => sup_min(&pa, &pb),
        CmpOp::Ne => {
            if pa.pts.len() == 1 && pb.pts.len() == 1 && pa.pts[0].0 == pb.pts[0].0 {
                0.0
            } else {
                pa.height().min(pb.height())
            }
        }
    }
}

/// Piecewise-linear function with constant values outside its breakpoints.
#[derive(Debug, Clone)]
struct Pl {
    pts: Vec<(f64, f64)>,
    left: f64,
    right: f64,
}

impl Pl {
    fn from_points(pts: Vec<(f64, f64)>) -> Self {
        Pl { pts, left: 0.0, right: 0.0 }
    }

    fn of_shape(s: &Shape) -> Pl {
        match s {
            Shape::Crisp(x) => Pl::from_points(vec![(*x, 1.0)]),
            Shape::Interval { lo, hi, peaked: true } => {
                Pl::from_points(vec![(*lo, 0.0), ((lo + hi) / 2.0, 1.0), (*hi, 0.0)])
            }
            Shape::Interval { lo, hi, peaked: false } => Pl::from_points(vec![(*lo, 1.0), (*hi, 1.0)]),
            Shape::Fuzzy(pl) => pl.clone(),
            Shape::Finite(_) => unreachable!("finite sets are expanded elementwise"),
        }
    }

    fn height(&self) -> f64 {
        self.pts.iter().map(|p| p.1).fold(self.left.max(self.right), f64::max)
    }

    fn at(&self, x: f64) -> f64 {
        let n = self.pts.len();
        if x < self.pts[0].0 {
            return self.left;
        }
        if x > self.pts[n - 1].0 {
            return self.right;
        }
        match self.pts.binary_search_by(|p| p.0.total_cmp(&x)) {
            Ok(i) => self.pts[i].1,
            Err(i) => lerp(self.pts[i - 1], self.pts[i], x),
        }
    }

    /// Limit approaching `x` from the right.
    fn right_limit(&self, x: f64) -> f64 {
        let n = self.pts.len();
        if x < self.pts[0].0 {
            return self.left;
        }
        if x >= self.pts[n - 1].0 {
            return self.right;
        }
        let i = self.pts.partition_point(|p| p.0 <= x);
        lerp(self.pts[i - 1], self.pts[i], x)
    }

    /// Limit approaching `x` from the left.
    fn left_limit(&self, x: f64) -> f64 {
        let n = self.pts.len();
        if x <= self.pts[0].0 {
            return self.left;
        }
        if x > self.pts[n - 1].0 {
            return self.right;
        }
        let i = self.pts.partition_point(|p| p.0 < x);
        lerp(self.pts[i - 1], self.pts[i], x)
    }

    fn mirror(&self) -> Pl {
        Pl { pts: self.pts.iter().rev().map(|&(x, m)| (-x, m)).collect(), left: self.right, right: self.left }
    }

    /// `R(x) = sup { f(x') : x' ≥ x }`.
    fn running_max_right(&self) -> Pl {
        let pts = &self.pts;
        let n = pts.len();
        let mut out = Vec::with_capacity(2 * n);
        let mut m = self.right.max(pts[n - 1].1);
        out.push((pts[n - 1].0, m));
        for i in (0..n - 1).rev() {
            let (x0, m0) = pts[i];
            let (x1, m1) = pts[i + 1];
            if m0 <= m {
                out.push((x0, m));
            } else {
                // the segment climbs above the running max somewhere in (x0, x1]
                let xc = x1 - (m - m1) / (m0 - m1) * (x1 - x0);
                if xc > x0 && xc < x1 {
                    out.push((xc, m));
                }
                out.push((x0, m0));
                m = m0;
            }
        }
        out.reverse();
        Pl { pts: out, left: m, right: self.right }
    }

    fn running_max_left(&self) -> Pl {
        self.mirror().running_max_right().mirror()
    }
}

fn lerp((x0, m0): (f64, f64), (x1, m1): (f64, f64), x: f64) -> f64 {
    m0 + (x - x0) / (x1 - x0) * (m1 - m0)
}

/// `sup_x min(p(x), q(x))`, exact for piecewise-linear inputs.
fn sup_min(p: &Pl, q: &Pl) -> f64 {
    let mut xs: Vec<f64> = p.pts.iter().chain(q.pts.iter()).map(|pt| pt.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut best = p.left.min(q.left).max(p.right.min(q.right));
    for &x in &xs {
        best = best.max(p.at(x).min(q.at(x)));
    }
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let (pa, pb) = (p.right_limit(x0), p.left_limit(x1));
        let (qa, qb) = (q.right_limit(x0), q.left_limit(x1));
        best = best.max(pa.min(qa)).max(pb.min(qb));
        let (da, db) = (pa - qa, pb - qb);
        if da * db < 0.0 {
            let t = da / (da - db);
            best = best.max(pa + t * (pb - pa));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::values::{MembershipFunction, TermTable};

    fn cmp(op: CmpOp, a: &Value, b: &Value) -> f64 {
        neg_compare(op, a, b, &NegContext::default()).unwrap().known().unwrap()
    }

    fn tri(a: f64, b: f64, c: f64) -> Value {
        Value::fuzzy(MembershipFunction::triangle(a, b, c).unwrap())
    }

    #[test]
    fn inexact_fraction() {
        let v = Value::inexact(3.0, 1.0).unwrap();
        assert_eq!(cmp(CmpOp::Gt, &v, &Value::number(3.0)), 0.5);
        assert_eq!(cmp(CmpOp::Lt, &Value::number(3.5), &v), 0.25);
        assert_eq!(cmp(CmpOp::Eq, &v, &Value::number(3.0)), 0.0);
    }

    #[test]
    fn crisp_is_binary() {
        assert_eq!(cmp(CmpOp::Eq, &Value::number(5.0), &Value::number(5.0)), 1.0);
        assert_eq!(cmp(CmpOp::Gt, &Value::number(5.0), &Value::number(5.0)), 0.0);
    }

    #[test]
    fn possibility_against_crisp() {
        assert_eq!(cmp(CmpOp::Gt, &tri(0.0, 5.0, 10.0), &Value::number(10.0)), 0.0);
        assert_eq!(cmp(CmpOp::Gt, &tri(0.0, 5.0, 10.0), &Value::number(7.5)), 0.5);
        assert_eq!(cmp(CmpOp::Gt, &tri(0.0, 5.0, 10.0), &Value::number(2.0)), 1.0);
        assert_eq!(cmp(CmpOp::Eq, &tri(0.0, 5.0, 10.0), &Value::number(2.5)), 0.5);
        assert_eq!(cmp(CmpOp::Lt, &tri(0.0, 5.0, 10.0), &Value::number(2.5)), 0.5);
        assert_eq!(cmp(CmpOp::Lt, &Value::number(7.5), &tri(0.0, 5.0, 10.0)), 0.5);
    }

    #[test]
    fn possibility_between_triangles() {
        // overlapping legs cross at height 0.5
        assert_eq!(cmp(CmpOp::Eq, &tri(0.0, 2.0, 4.0), &tri(2.0, 4.0, 6.0)), 0.5);
        assert_eq!(cmp(CmpOp::Gt, &tri(0.0, 2.0, 4.0), &tri(2.0, 4.0, 6.0)), 0.5);
        assert_eq!(cmp(CmpOp::Lt, &tri(0.0, 2.0, 4.0), &tri(2.0, 4.0, 6.0)), 1.0);
        assert_eq!(cmp(CmpOp::Eq, &tri(0.0, 1.0, 2.0), &tri(5.0, 6.0, 7.0)), 0.0);
    }

    #[test]
    fn product_space_fraction() {
        let a = Value::range(0.0, 2.0).unwrap();
        let b = Value::range(1.0, 3.0).unwrap();
        // P(X > Y) for X~U[0,2], Y~U[1,3]: triangle of area 1/2 over 4
        assert_eq!(cmp(CmpOp::Gt, &a, &b), 0.125);
        assert_eq!(cmp(CmpOp::Lt, &a, &b), 0.875);
        let s = Value::finite_set(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(cmp(CmpOp::Ge, &s, &Value::number(3.0)), 0.5);
        assert_eq!(cmp(CmpOp::Gt, &s, &a), 0.875);
    }

    #[test]
    fn terms_and_symbols() {
        let mut table = TermTable::new();
        table.insert("high".into(), MembershipFunction::triangle(70.0, 90.0, 100.0).unwrap());
        let ctx = NegContext { terms: Some(&table), ..Default::default() };
        let t = neg_compare(CmpOp::Eq, &Value::number(80.0), &Value::term("high"), &ctx).unwrap();
        assert_eq!(t, TruthValue::Known(0.5));
        let t = neg_compare(CmpOp::Eq, &Value::term("auto"), &Value::term("auto"), &ctx).unwrap();
        assert_eq!(t, TruthValue::TRUE);
        assert!(matches!(
            neg_compare(CmpOp::Eq, &Value::number(1.0), &Value::term("auto"), &ctx),
            Err(ValueError::UnknownTerm(_))
        ));
        assert!(matches!(
            neg_compare(CmpOp::Gt, &Value::number(1.0), &Value::term("x"), &NegContext::default()),
            Err(ValueError::Incomparable { .. })
        ));
    }

    #[test]
    fn booleans() {
        let t = Value::boolean(true);
        assert_eq!(cmp(CmpOp::Eq, &t, &t), 1.0);
        assert_eq!(cmp(CmpOp::Ne, &t, &Value::boolean(false)), 1.0);
        assert!(neg_compare(CmpOp::Gt, &t, &t, &NegContext::default()).is_err());
        assert!(neg_compare(CmpOp::Eq, &t, &Value::number(1.0), &NegContext::default()).is_err());
    }

    #[test]
    fn running_max_of_triangle() {
        let pl = Pl::from_points(vec![(0.0, 0.0), (5.0, 1.0), (10.0, 0.0)]);
        let r = pl.running_max_right();
        assert_eq!(r.at(-3.0), 1.0);
        assert_eq!(r.at(5.0), 1.0);
        assert_eq!(r.at(7.5), 0.5);
        assert_eq!(r.at(11.0), 0.0);
        let l = pl.running_max_left();
        assert_eq!(l.at(2.5), 0.5);
        assert_eq!(l.at(8.0), 1.0);
        assert_eq!(l.at(-1.0), 0.0);
    }
}
