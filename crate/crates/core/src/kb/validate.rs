//! Semantic checks over a parsed knowledge base.

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::Diagnostic;
use crate::engine::EngineConfig;
use crate::values::Payload;

const BUILTIN_TYPES: [&str; 3] = ["number", "symbol", "boolean"];

/// Returns one diagnostic per violated invariant; empty means valid.
pub fn validate_kb(kb: &KnowledgeBase) -> Vec<Diagnostic> {
    let mut v = Validator { kb, out: Vec::new() };
    v.names();
    v.types();
    v.objects();
    for e in &kb.events {
        v.expr(&e.origin, e.span);
    }
    for i in &kb.intervals {
        v.expr(&i.open, i.span);
        v.expr(&i.close, i.span);
    }
    for r in &kb.rules {
        v.rule(r);
    }
    if let Err((span, msg)) = EngineConfig::default().apply_entries(&kb.config) {
        v.out.push(Diagnostic::new(span, msg));
    }
    v.out
}

struct Validator<'a> {
    kb: &'a KnowledgeBase,
    out: Vec<Diagnostic>,
}

impl Validator<'_> {
    fn push(&mut self, span: Span, msg: impl Into<String>) {
        self.out.push(Diagnostic::new(span, msg));
    }

    fn names(&mut self) {
        let kb = self.kb;
        let dup = |what: &str, items: Vec<(&str, Span)>, out: &mut Vec<Diagnostic>| {
            let mut seen = BTreeSet::new();
            for (name, span) in items {
                if !seen.insert(name) {
                    out.push(Diagnostic::new(span, format!("duplicate {what} name `{name}`")));
                }
            }
        };
        dup("type", kb.types.iter().map(|t| (t.name.as_str(), t.span)).collect(), &mut self.out);
        dup("object", kb.objects.iter().map(|o| (o.name.as_str(), o.span)).collect(), &mut self.out);
        dup(
            "temporal object",
            kb.events
                .iter()
                .map(|e| (e.name.as_str(), e.span))
                .chain(kb.intervals.iter().map(|i| (i.name.as_str(), i.span)))
                .collect(),
            &mut self.out,
        );
        dup("rule", kb.rules.iter().map(|r| (r.name.as_str(), r.span)).collect(), &mut self.out);
        for o in &kb.objects {
            dup("attribute", o.attrs.iter().map(|a| (a.name.as_str(), a.span)).collect(), &mut self.out);
        }
    }

    fn types(&mut self) {
        for t in &self.kb.types {
            if BUILTIN_TYPES.contains(&t.name.as_str()) {
                self.push(t.span, format!("type name `{}` shadows a builtin type", t.name));
            }
            match &t.kind {
                TypeKind::Number { range: Some((lo, hi)) } if lo > hi => {
                    self.push(t.span, format!("empty range [{lo}, {hi}] in type `{}`", t.name));
                }
                TypeKind::Boolean if !t.terms.is_empty() => {
                    self.push(t.span, format!("boolean type `{}` cannot declare linguistic terms", t.name));
                }
                _ => {}
            }
            let mut seen = BTreeSet::new();
            for (name, _) in &t.terms {
                if !seen.insert(name) {
                    self.push(t.span, format!("duplicate term `{name}` in type `{}`", t.name));
                }
            }
        }
    }

    fn objects(&mut self) {
        for o in &self.kb.objects {
            for a in &o.attrs {
                if !BUILTIN_TYPES.contains(&a.ty.as_str()) && self.kb.type_decl(&a.ty).is_none() {
                    self.push(a.span, format!("unknown type `{}` for attribute `{}.{}`", a.ty, o.name, a.name));
                }
            }
        }
    }

    fn attr_kind(&self, r: &AttrRef) -> Option<&str> {
        let decl = self.kb.attr_decl(r)?;
        Some(match self.kb.type_decl(&decl.ty).map(|t| &t.kind) {
            Some(TypeKind::Number { .. }) => "number",
            Some(TypeKind::Symbol { .. }) => "symbol",
            Some(TypeKind::Boolean) => "boolean",
            None => decl.ty.as_str(),
        })
    }

    fn check_ref(&mut self, r: &AttrRef, span: Span) -> bool {
        if self.kb.attr_decl(r).is_some() {
            true
        } else {
            self.push(span, format!("unresolved reference `{r}`"));
            false
        }
    }

    /// Terms compared with or assigned to an attribute must belong to its
    /// declared vocabulary when it has one.
    fn check_term(&mut self, r: &AttrRef, term: &str, span: Span) {
        let Some(decl) = self.kb.attr_decl(r) else { return };
        let Some(t) = self.kb.type_decl(&decl.ty) else {
            if decl.ty != "symbol" {
                self.push(span, format!("term `{term}` used with non-symbolic attribute `{r}`"));
            }
            return;
        };
        let known = t.terms.iter().any(|(n, _)| n == term)
            || matches!(&t.kind, TypeKind::Symbol { values } if values.is_empty() || values.iter().any(|v| v == term));
        if !known {
            self.push(span, format!("term `{term}` is not declared for `{r}` (type `{}`)", t.name));
        }
    }

    fn arith(&mut self, a: &Arith, span: Span) {
        for r in a.refs() {
            self.check_ref(r, span);
        }
    }

    fn expr(&mut self, e: &Expr, span: Span) {
        for atom in e.atoms() {
            match atom {
                Expr::Cmp { lhs, rhs, .. } => {
                    self.arith(lhs, span);
                    self.arith(rhs, span);
                    for (side, other) in [(lhs, rhs), (rhs, lhs)] {
                        if let (Arith::Ref(r), Arith::Lit(v)) = (side, other) {
                            if let Payload::Term(t) = &v.payload {
                                self.check_term(r, t, span);
                            }
                        }
                    }
                }
                Expr::Truthy(r) if self.check_ref(r, span) && self.attr_kind(r) != Some("boolean") => {
                    self.push(span, format!("`{r}` used as a condition but is not boolean"));
                }
                _ => {}
            }
        }
    }

    fn temporal(&mut self, f: &TemporalFormula, span: Span) {
        let kind_name = |k: TemporalKind| match k {
            TemporalKind::Event => "event",
            TemporalKind::Interval => "interval",
        };
        for atom in f.atoms() {
            match atom {
                TemporalFormula::Var(v) | TemporalFormula::Attr { var: v, .. } => {
                    if self.kb.temporal_kind(v).is_none() {
                        self.push(span, format!("unknown event or interval `{v}`"));
                    }
                }
                TemporalFormula::Rel { lhs, rel, rhs } => {
                    let (lk, rk) = (self.kb.temporal_kind(lhs), self.kb.temporal_kind(rhs));
                    for (name, k) in [(lhs, lk), (rhs, rk)] {
                        if k.is_none() {
                            self.push(span, format!("unknown event or interval `{name}`"));
                        }
                    }
                    if let (Some(lk), Some(rk)) = (lk, rk) {
                        if !rel.allowed(lk, rk) {
                            let msg = if lk == rk {
                                format!("connective {rel} not allowed between {}s", kind_name(lk))
                            } else {
                                format!("connective {rel} not allowed between {} and {}", kind_name(lk), kind_name(rk))
                            };
                            self.push(span, msg);
                        }
                    }
                }
                _ => {}
            }
        }
    }

    fn rule(&mut self, r: &Rule) {
        match &r.kind {
            RuleKind::Periodic(0) => self.push(r.span, format!("rule `{}`: period must be at least 1", r.name)),
            RuleKind::Response(e) if self.kb.temporal_kind(e).is_none() => {
                self.push(r.span, format!("unknown trigger `{e}` in rule `{}`", r.name));
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&r.cf) {
            self.push(r.span, format!("rule `{}`: cf {} outside [0, 1]", r.name, r.cf));
        }
        if let Some(c) = &r.condition {
            self.expr(c, r.span);
        }
        if let Some(t) = &r.temporal {
            self.temporal(t, r.span);
        }
        if r.actions.is_empty() {
            self.push(r.span, format!("rule `{}` has no actions", r.name));
        }
        let mut targets: HashMap<&AttrRef, usize> = HashMap::new();
        for a in &r.actions {
            *targets.entry(&a.target).or_default() += 1;
            if self.check_ref(&a.target, r.span) {
                if let Arith::Lit(v) = &a.value {
                    match (&v.payload, self.attr_kind(&a.target)) {
                        (Payload::Term(t), _) => self.check_term(&a.target, t, r.span),
                        (Payload::Bool(_), Some("boolean")) => {}
                        (Payload::Bool(_), _) => {
                            self.push(r.span, format!("boolean assigned to non-boolean `{}`", a.target));
                        }
                        (_, Some("boolean")) => {
                            self.push(r.span, format!("non-boolean value assigned to `{}`", a.target));
                        }
                        _ => {}
                    }
                }
            }
            self.arith(&a.value, r.span);
            if let Some(cf) = a.cf {
                if !(0.0..=1.0).contains(&cf) {
                    self.push(r.span, format!("rule `{}`: action cf {cf} outside [0, 1]", r.name));
                }
            }
        }
        let mut dups: Vec<_> = targets.into_iter().filter(|(_, n)| *n > 1).map(|(t, _)| t.to_string()).collect();
        dups.sort();
        for t in dups {
            self.push(r.span, format!("rule `{}` assigns `{t}` more than once", r.name));
        }
    }
}
