//! Antecedent and right-hand-side evaluation against working memory.

use crate::kb::{AttrId, CArith, CExpr, CNodeKind, CompiledKb, TypeKind};
use crate::values::{neg_arith, neg_compare, ArithOp, NegContext, Payload, TruthValue, Value, ValueError};
use crate::wm::{EvalCache, WorkingMemory};

use super::EngineConfig;

/// Why an arithmetic expression produced no value.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ArithFailure {
    Missing(AttrId),
    Value(ValueError),
}

/// Cache entries produced while evaluating one rule, merged afterwards.
pub(crate) type NewEntries = Vec<((usize, usize), TruthValue, Vec<AttrId>)>;

#[derive(Clone, Copy)]
pub(crate) struct Env<'a> {
    pub kb: &'a CompiledKb,
    pub wm: &'a WorkingMemory,
    pub cfg: &'a EngineConfig,
}

impl<'a> Env<'a> {
    pub fn ctx(&self, scope: Option<AttrId>) -> NegContext<'a> {
        let mut ctx = NegContext {
            terms: None,
            alpha_levels: self.cfg.alpha_levels,
            singleton_epsilon: self.cfg.singleton_epsilon,
        };
        if let Some(id) = scope {
            let ty = self.kb.type_of(id);
            if !ty.terms.is_empty() {
                ctx.terms = Some(&ty.terms);
            }
            if let Some((lo, hi)) = ty.range() {
                if hi > lo {
                    ctx.singleton_epsilon *= hi - lo;
                }
            }
        }
        ctx
    }

    pub fn arith(&self, a: &CArith, ctx: &NegContext<'_>) -> Result<Value, ArithFailure> {
        match a {
            CArith::Lit(v) => Ok(v.clone()),
            CArith::Ref(id) => self.wm.lookup(*id).map(|f| f.value.clone()).ok_or(ArithFailure::Missing(*id)),
            CArith::Neg(x) => {
                let v = self.arith(x, ctx)?;
                neg_arith(ArithOp::Sub, &Value::number(0.0), &v, ctx).map_err(ArithFailure::Value)
            }
            CArith::Bin(op, x, y) => {
                let (x, y) = (self.arith(x, ctx)?, self.arith(y, ctx)?);
                neg_arith(*op, &x, &y, ctx).map_err(ArithFailure::Value)
            }
        }
    }

    fn atom(&self, kind: &CNodeKind) -> TruthValue {
        match kind {
            CNodeKind::Const(b) => TruthValue::from_bool(*b),
            CNodeKind::Truthy(id) => match self.wm.lookup(*id).map(|f| &f.value.payload) {
                Some(Payload::Bool(b)) => TruthValue::from_bool(*b),
                _ => TruthValue::NE,
            },
            CNodeKind::Cmp { op, lhs, rhs, scope } => {
                let ctx = self.ctx(*scope);
                match (self.arith(lhs, &ctx), self.arith(rhs, &ctx)) {
                    (Ok(a), Ok(b)) => neg_compare(*op, &a, &b, &ctx).unwrap_or(TruthValue::NE),
                    _ => TruthValue::NE,
                }
            }
            _ => unreachable!("connective passed as atom"),
        }
    }

    /// Uncached evaluation of node `id`.
    pub fn node(&self, e: &CExpr, id: usize) -> TruthValue {
        match &e.nodes[id].kind {
            CNodeKind::And(a, b) => self.node(e, *a).and(self.node(e, *b)),
            CNodeKind::Or(a, b) => self.node(e, *a).or(self.node(e, *b)),
            CNodeKind::Not(a) => self.node(e, *a).not(),
            atom => self.atom(atom),
        }
    }

    /// Evaluation of node `id` of rule `rule` that reuses valid cache
    /// entries and records fresh ones in `fresh`.
    pub fn node_cached(
        &self,
        rule: usize,
        e: &CExpr,
        id: usize,
        cache: &EvalCache,
        fresh: &mut NewEntries,
        stats: &mut (u64, u64),
    ) -> TruthValue {
        if let Some(t) = cache.get((rule, id), self.wm) {
            stats.0 += 1;
            return t;
        }
        stats.1 += 1;
        let t = match &e.nodes[id].kind {
            CNodeKind::And(a, b) => self
                .node_cached(rule, e, *a, cache, fresh, stats)
                .and(self.node_cached(rule, e, *b, cache, fresh, stats)),
            CNodeKind::Or(a, b) => self
                .node_cached(rule, e, *a, cache, fresh, stats)
                .or(self.node_cached(rule, e, *b, cache, fresh, stats)),
            CNodeKind::Not(a) => self.node_cached(rule, e, *a, cache, fresh, stats).not(),
            atom => self.atom(atom),
        };
        fresh.push(((rule, id), t, e.nodes[id].deps.clone()));
        t
    }
}

/// Checks that a value fits the declared type of an attribute.
pub(crate) fn check_value(kb: &CompiledKb, id: AttrId, v: &Value) -> Result<(), String> {
    let ty = kb.type_of(id);
    let attr = &kb.attr(id).attr;
    match (&ty.kind, &v.payload) {
        (TypeKind::Boolean, Payload::Bool(_)) => Ok(()),
        (TypeKind::Boolean, p) => Err(format!("{attr} expects a boolean, got a {} value", p.kind())),
        (_, Payload::Bool(_)) => Err(format!("{attr} does not accept booleans")),
        (TypeKind::Symbol { values }, Payload::Term(t)) => {
            if values.is_empty() && ty.terms.is_empty() || values.contains(t) || ty.terms.contains_key(t) {
                Ok(())
            } else {
                Err(format!("`{t}` is not in the domain {} of {attr}", ty.describe()))
            }
        }
        (TypeKind::Symbol { .. }, p) if ty.terms.is_empty() => {
            Err(format!("{attr} expects a symbol, got a {} value", p.kind()))
        }
        (TypeKind::Number { .. }, Payload::Term(t)) if !ty.terms.contains_key(t) => {
            Err(format!("`{t}` is not a linguistic term of {attr}"))
        }
        _ => Ok(()),
    }
}
