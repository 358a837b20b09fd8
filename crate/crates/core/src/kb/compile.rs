//! Lowering of a validated knowledge base into the indexed form used by the
//! engine: attribute ids, expression arenas with stable node ids, and
//! per-node dependency sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use sha2::{Digest, Sha256};

use super::ast::*;
use super::{normalize_kb, parse_kb_unchecked, validate_kb, KbError};
use crate::values::{ArithOp, CmpOp, TermTable, Value};

/// Index into [`CompiledKb::attrs`]; attributes are numbered in
/// `object.attr` name order.
pub type AttrId = usize;

#[derive(Debug, Clone)]
pub struct TypeInfo {
    pub name: String,
    pub kind: TypeKind,
    pub terms: TermTable,
}

impl TypeInfo {
    fn builtin(name: &str) -> Self {
        let kind = match name {
            "number" => TypeKind::Number { range: None },
            "symbol" => TypeKind::Symbol { values: vec![] },
            _ => TypeKind::Boolean,
        };
        Self { name: name.to_string(), kind, terms: TermTable::new() }
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        match self.kind {
            TypeKind::Number { range } => range,
            _ => None,
        }
    }

    /// Size of the declared value domain; unbounded or continuous domains
    /// count as infinite.
    pub fn domain_size(&self) -> f64 {
        match &self.kind {
            TypeKind::Boolean => 2.0,
            TypeKind::Symbol { values } if !values.is_empty() => values.len() as f64,
            TypeKind::Symbol { .. } if !self.terms.is_empty() => self.terms.len() as f64,
            TypeKind::Symbol { .. } => f64::INFINITY,
            TypeKind::Number { range: Some((lo, hi)) } if lo.fract() == 0.0 && hi.fract() == 0.0 => hi - lo + 1.0,
            TypeKind::Number { .. } => f64::INFINITY,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            TypeKind::Boolean => "boolean".into(),
            TypeKind::Symbol { values } if !values.is_empty() => format!("{{{}}}", values.join(", ")),
            TypeKind::Symbol { .. } => "symbol".into(),
            TypeKind::Number { range: Some((lo, hi)) } => format!("number in [{lo}, {hi}]"),
            TypeKind::Number { range: None } => "number".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttrInfo {
    pub attr: AttrRef,
    pub ty: String,
    pub output: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CArith {
    Lit(Value),
    Ref(AttrId),
    Neg(Box<CArith>),
    Bin(ArithOp, Box<CArith>, Box<CArith>),
}

impl CArith {
    fn collect_refs(&self, out: &mut BTreeSet<AttrId>) {
        match self {
            CArith::Lit(_) => {}
            CArith::Ref(id) => {
                out.insert(*id);
            }
            CArith::Neg(a) => a.collect_refs(out),
            CArith::Bin(_, a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
        }
    }

    fn first_ref(&self) -> Option<AttrId> {
        match self {
            CArith::Lit(_) => None,
            CArith::Ref(id) => Some(*id),
            CArith::Neg(a) => a.first_ref(),
            CArith::Bin(_, a, b) => a.first_ref().or_else(|| b.first_ref()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CNodeKind {
    And(usize, usize),
    Or(usize, usize),
    Not(usize),
    /// `scope` is the attribute whose type supplies the term table and the
    /// singleton width for fuzzification.
    Cmp {
        op: CmpOp,
        lhs: CArith,
        rhs: CArith,
        scope: Option<AttrId>,
    },
    Truthy(AttrId),
    Const(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CNode {
    pub kind: CNodeKind,
    /// Attributes read anywhere below this node, ascending.
    pub deps: Vec<AttrId>,
}

/// Expression arena; node ids follow preorder and the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CExpr {
    pub nodes: Vec<CNode>,
}

impl CExpr {
    pub const ROOT: usize = 0;

    pub fn deps(&self) -> &[AttrId] {
        &self.nodes[Self::ROOT].deps
    }
}

#[derive(Debug, Clone)]
pub struct CAction {
    pub target: AttrId,
    pub value: CArith,
    pub cf: f64,
}

#[derive(Debug, Clone)]
pub struct CRule {
    pub name: String,
    pub index: usize,
    pub kind: RuleKind,
    pub cf: f64,
    pub condition: Option<CExpr>,
    pub temporal: Option<TemporalFormula>,
    /// Temporal object ids referenced by the temporal fragment, ascending.
    pub temporal_vars: Vec<usize>,
    pub actions: Vec<CAction>,
    pub specificity: usize,
    pub deps: Vec<AttrId>,
}

#[derive(Debug, Clone)]
pub struct TemporalInfo {
    pub name: String,
    pub kind: TemporalKind,
    /// Origin condition for events, open condition for intervals.
    pub start: CExpr,
    pub close: Option<CExpr>,
}

#[derive(Debug, Clone)]
pub struct CompiledKb {
    pub kb: KnowledgeBase,
    pub attrs: Vec<AttrInfo>,
    pub types: BTreeMap<String, TypeInfo>,
    /// Events first, then intervals, each in declaration order.
    pub temporal: Vec<TemporalInfo>,
    pub rules: Vec<CRule>,
    ids: HashMap<AttrRef, AttrId>,
    temporal_ids: HashMap<String, usize>,
    hash: String,
}

impl CompiledKb {
    pub fn from_source(src: &str) -> Result<Self, KbError> {
        Self::new(normalize_kb(parse_kb_unchecked(src)?))
    }

    /// Validates and compiles; `kb` is normalized first.
    pub fn new(kb: KnowledgeBase) -> Result<Self, KbError> {
        let kb = normalize_kb(kb);
        let diags = validate_kb(&kb);
        if !diags.is_empty() {
            return Err(KbError::Invalid(diags));
        }
        let mut types: BTreeMap<String, TypeInfo> =
            ["number", "symbol", "boolean"].iter().map(|n| (n.to_string(), TypeInfo::builtin(n))).collect();
        for t in &kb.types {
            types.insert(
                t.name.clone(),
                TypeInfo { name: t.name.clone(), kind: t.kind.clone(), terms: t.terms.iter().cloned().collect() },
            );
        }
        let mut attrs: Vec<AttrInfo> = kb
            .objects
            .iter()
            .flat_map(|o| {
                o.attrs.iter().map(move |a| AttrInfo {
                    attr: AttrRef::new(&o.name, &a.name),
                    ty: a.ty.clone(),
                    output: a.output,
                })
            })
            .collect();
        attrs.sort_by(|a, b| a.attr.cmp(&b.attr));
        let ids = attrs.iter().enumerate().map(|(i, a)| (a.attr.clone(), i)).collect();
        let mut ckb = CompiledKb {
            hash: String::new(),
            attrs,
            types,
            temporal: vec![],
            rules: vec![],
            ids,
            temporal_ids: HashMap::new(),
            kb,
        };
        let kb = ckb.kb.clone();
        for e in &kb.events {
            let start = ckb.compile_expr(&e.origin);
            ckb.temporal.push(TemporalInfo { name: e.name.clone(), kind: TemporalKind::Event, start, close: None });
        }
        for i in &kb.intervals {
            let start = ckb.compile_expr(&i.open);
            let close = Some(ckb.compile_expr(&i.close));
            ckb.temporal.push(TemporalInfo { name: i.name.clone(), kind: TemporalKind::Interval, start, close });
        }
        ckb.temporal_ids = ckb.temporal.iter().enumerate().map(|(i, t)| (t.name.clone(), i)).collect();
        for (index, r) in kb.rules.iter().enumerate() {
            let condition = r.condition.as_ref().map(|c| ckb.compile_expr(c));
            let temporal_vars: BTreeSet<usize> =
                r.temporal.iter().flat_map(|t| t.vars()).map(|v| ckb.temporal_ids[v]).collect();
            let actions: Vec<CAction> = r
                .actions
                .iter()
                .map(|a| CAction {
                    target: ckb.ids[&a.target],
                    value: ckb.compile_arith(&a.value),
                    cf: a.cf.unwrap_or(1.0),
                })
                .collect();
            ckb.rules.push(CRule {
                name: r.name.clone(),
                index,
                kind: r.kind.clone(),
                cf: r.cf,
                deps: condition.as_ref().map(|c| c.deps().to_vec()).unwrap_or_default(),
                condition,
                temporal: r.temporal.clone(),
                temporal_vars: temporal_vars.into_iter().collect(),
                actions,
                specificity: r.specificity(),
            });
        }
        ckb.hash = hex::encode(Sha256::digest(ckb.canonical_text().as_bytes()));
        Ok(ckb)
    }

    /// Pretty-printed normalized source; the basis of [`Self::hash`].
    pub fn canonical_text(&self) -> String {
        self.kb.to_string()
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn attr_id(&self, r: &AttrRef) -> Option<AttrId> {
        self.ids.get(r).copied()
    }

    pub fn attr(&self, id: AttrId) -> &AttrInfo {
        &self.attrs[id]
    }

    pub fn type_of(&self, id: AttrId) -> &TypeInfo {
        &self.types[&self.attrs[id].ty]
    }

    pub fn temporal_id(&self, name: &str) -> Option<usize> {
        self.temporal_ids.get(name).copied()
    }

    pub fn rule_index(&self, name: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.name == name)
    }

    /// Whether any rule assigns the attribute.
    pub fn is_concluded(&self, id: AttrId) -> bool {
        self.rules.iter().any(|r| r.actions.iter().any(|a| a.target == id))
    }

    fn compile_arith(&self, a: &Arith) -> CArith {
        match a {
            Arith::Lit(v) => CArith::Lit(v.clone()),
            Arith::Ref(r) => CArith::Ref(self.ids[r]),
            Arith::Neg(x) => CArith::Neg(Box::new(self.compile_arith(x))),
            Arith::Bin(op, x, y) => CArith::Bin(*op, Box::new(self.compile_arith(x)), Box::new(self.compile_arith(y))),
        }
    }

    pub(crate) fn compile_expr(&self, e: &Expr) -> CExpr {
        let mut nodes = Vec::new();
        self.lower(e, &mut nodes);
        CExpr { nodes }
    }

    fn lower(&self, e: &Expr, nodes: &mut Vec<CNode>) -> usize {
        let id = nodes.len();
        nodes.push(CNode { kind: CNodeKind::Const(false), deps: vec![] });
        let mut deps = BTreeSet::new();
        let kind = match e {
            Expr::And(a, b) | Expr::Or(a, b) => {
                let l = self.lower(a, nodes);
                let r = self.lower(b, nodes);
                deps.extend(nodes[l].deps.iter().chain(&nodes[r].deps).copied());
                if matches!(e, Expr::And(..)) {
                    CNodeKind::And(l, r)
                } else {
                    CNodeKind::Or(l, r)
                }
            }
            Expr::Not(a) => {
                let x = self.lower(a, nodes);
                deps.extend(nodes[x].deps.iter().copied());
                CNodeKind::Not(x)
            }
            Expr::Cmp { op, lhs, rhs } => {
                let (lhs, rhs) = (self.compile_arith(lhs), self.compile_arith(rhs));
                lhs.collect_refs(&mut deps);
                rhs.collect_refs(&mut deps);
                let scope = lhs.first_ref().or_else(|| rhs.first_ref());
                CNodeKind::Cmp { op: *op, lhs, rhs, scope }
            }
            Expr::Truthy(r) => {
                let id = self.ids[r];
                deps.insert(id);
                CNodeKind::Truthy(id)
            }
            Expr::Const(b) => CNodeKind::Const(*b),
        };
        nodes[id] = CNode { kind, deps: deps.into_iter().collect() };
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "
        type Temp { kind: number; range: [0, 200]; term high: tri(70, 90, 110); }
        object y { alarm: boolean; }
        object x { t: Temp; p: number; }
        event E { origin: x.t > 90; }
        interval I { open: x.p > 1; close: x.p < 1; }
        rule r { if: x.t > 1 & x.p < 2 & y.alarm; when: E b I; then: y.alarm := true; }
    ";

    #[test]
    fn ids_are_name_ordered() {
        let c = CompiledKb::from_source(SRC).unwrap();
        let names: Vec<String> = c.attrs.iter().map(|a| a.attr.to_string()).collect();
        assert_eq!(names, ["x.p", "x.t", "y.alarm"]);
        assert_eq!(c.temporal_id("I"), Some(1));
    }

    #[test]
    fn preorder_nodes_and_deps() {
        let c = CompiledKb::from_source(SRC).unwrap();
        let r = &c.rules[0];
        let cond = r.condition.as_ref().unwrap();
        assert_eq!(cond.nodes.len(), 5);
        assert!(matches!(cond.nodes[0].kind, CNodeKind::And(1, 2)));
        assert!(matches!(cond.nodes[2].kind, CNodeKind::And(3, 4)));
        assert_eq!(cond.deps(), &[0, 1, 2]);
        assert_eq!(r.specificity, 4);
        assert_eq!(r.temporal_vars, vec![0, 1]);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn domain_sizes() {
        let c = CompiledKb::from_source(SRC).unwrap();
        assert_eq!(c.types["Temp"].domain_size(), 201.0);
        assert_eq!(c.types["boolean"].domain_size(), 2.0);
        assert!(c.types["number"].domain_size().is_infinite());
    }
}
