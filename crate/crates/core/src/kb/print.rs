//! Canonical KRL rendering. Binary connectives and arithmetic are fully
//! parenthesized so the output re-parses to the same tree.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;
use crate::values::{AdmissibleSet, MembershipFunction, Payload, Value};

const RESERVED: [&str; 7] = ["true", "false", "v", "mf", "tri", "trap", "cf"];

fn is_plain_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&s)
}

fn write_term(f: &mut Formatter<'_>, t: &str) -> fmt::Result {
    if is_plain_ident(t) {
        f.write_str(t)
    } else {
        f.write_char('"')?;
        for c in t.chars() {
            if c == '"' || c == '\\' {
                f.write_char('\\')?;
            }
            f.write_char(c)?;
        }
        f.write_char('"')
    }
}

pub(crate) struct Mf<'a>(pub &'a MembershipFunction);

impl Display for Mf<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str("mf(")?;
        for (i, (x, m)) in self.0.points().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({x}, {m})")?;
        }
        f.write_str(")")
    }
}

/// A value in KRL literal syntax. Certainty is not expressible and dropped.
pub(crate) struct Lit<'a>(pub &'a Value);

impl Display for Lit<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match &self.0.payload {
            Payload::Number(x) => write!(f, "{x}"),
            Payload::Term(t) => write_term(f, t),
            Payload::Bool(b) => write!(f, "{b}"),
            Payload::Inexact { center, half_width } => write!(f, "{center} +- {half_width}"),
            Payload::Set(AdmissibleSet::Finite(xs)) => {
                f.write_str("{")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("}")
            }
            Payload::Set(AdmissibleSet::Range(lo, hi)) => write!(f, "[{lo}, {hi}]"),
            Payload::Fuzzy(mf) => write!(f, "{}", Mf(mf)),
        }
    }
}

impl Display for Arith {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Arith::Lit(v) => write!(f, "{}", Lit(v)),
            Arith::Ref(r) => write!(f, "{r}"),
            Arith::Neg(a) => write!(f, "-({a})"),
            Arith::Bin(op, a, b) => write!(f, "({a} {op} {b})"),
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::And(a, b) => write!(f, "({a} & {b})"),
            Expr::Or(a, b) => write!(f, "({a} v {b})"),
            Expr::Not(a) => match **a {
                Expr::Cmp { .. } => write!(f, "~({a})"),
                _ => write!(f, "~{a}"),
            },
            Expr::Cmp { op, lhs, rhs } => write!(f, "{lhs} {op} {rhs}"),
            Expr::Truthy(r) => write!(f, "{r}"),
            Expr::Const(b) => write!(f, "{b}"),
        }
    }
}

impl Display for TemporalFormula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            TemporalFormula::Var(v) => f.write_str(v),
            TemporalFormula::Rel { lhs, rel, rhs } => write!(f, "{lhs} {rel} {rhs}"),
            TemporalFormula::Attr { var, attr, op, value } => write!(f, "{var}.{} {op} {value}", attr.letter()),
            TemporalFormula::Not(a) => match **a {
                TemporalFormula::Var(_) | TemporalFormula::And(..) | TemporalFormula::Or(..) => write!(f, "~{a}"),
                _ => write!(f, "~({a})"),
            },
            TemporalFormula::And(a, b) => write!(f, "({a} & {b})"),
            TemporalFormula::Or(a, b) => write!(f, "({a} v {b})"),
        }
    }
}

impl Display for RuleKind {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            RuleKind::Conventional => f.write_str("conventional"),
            RuleKind::Periodic(p) => write!(f, "periodic {p}"),
            RuleKind::Response(e) => write!(f, "response {e}"),
        }
    }
}

impl Display for ConfigValue {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ConfigValue::Number(x) => write!(f, "{x}"),
            ConfigValue::Ident(s) => f.write_str(s),
            ConfigValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl Display for KnowledgeBase {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for t in &self.types {
            writeln!(f, "type {} {{", t.name)?;
            match &t.kind {
                TypeKind::Number { range } => {
                    writeln!(f, "    kind: number;")?;
                    if let Some((lo, hi)) = range {
                        writeln!(f, "    range: [{lo}, {hi}];")?;
                    }
                }
                TypeKind::Symbol { values } => {
                    writeln!(f, "    kind: symbol;")?;
                    if !values.is_empty() {
                        writeln!(f, "    values: {{{}}};", values.join(", "))?;
                    }
                }
                TypeKind::Boolean => writeln!(f, "    kind: boolean;")?,
            }
            for (name, mf) in &t.terms {
                writeln!(f, "    term {name}: {};", Mf(mf))?;
            }
            writeln!(f, "}}\n")?;
        }
        for o in &self.objects {
            writeln!(f, "object {} {{", o.name)?;
            for a in &o.attrs {
                let out = if a.output { "output " } else { "" };
                writeln!(f, "    {out}{}: {};", a.name, a.ty)?;
            }
            writeln!(f, "}}\n")?;
        }
        for e in &self.events {
            writeln!(f, "event {} {{\n    origin: {};\n}}\n", e.name, e.origin)?;
        }
        for i in &self.intervals {
            writeln!(f, "interval {} {{\n    open: {};\n    close: {};\n}}\n", i.name, i.open, i.close)?;
        }
        for r in &self.rules {
            writeln!(f, "rule {} {{", r.name)?;
            writeln!(f, "    kind: {};", r.kind)?;
            writeln!(f, "    cf: {};", r.cf)?;
            if let Some(c) = &r.condition {
                writeln!(f, "    if: {c};")?;
            }
            if let Some(t) = &r.temporal {
                writeln!(f, "    when: {t};")?;
            }
            if !r.actions.is_empty() {
                f.write_str("    then: ")?;
                for (i, a) in r.actions.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{} := {}", a.target, a.value)?;
                    if let Some(cf) = a.cf {
                        write!(f, " cf {cf}")?;
                    }
                }
                writeln!(f, ";")?;
            }
            writeln!(f, "}}\n")?;
        }
        if !self.config.is_empty() {
            writeln!(f, "config {{")?;
            for c in &self.config {
                writeln!(f, "    {}: {};", c.key, c.value)?;
            }
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}
