//! Abstract syntax of the knowledge representation language.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::values::{ArithOp, CmpOp, MembershipFunction, Value};

/// Source position. Positions never take part in AST equality, so a
/// re-parsed pretty-print compares equal to the original.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// `object.attribute`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttrRef {
    pub object: String,
    pub attr: String,
}

impl AttrRef {
    pub fn new(object: impl Into<String>, attr: impl Into<String>) -> Self {
        Self { object: object.into(), attr: attr.into() }
    }

    /// Parses `"obj.attr"`.
    pub fn parse(s: &str) -> Option<Self> {
        let (o, a) = s.split_once('.')?;
        let ok = |p: &str| {
            let mut cs = p.chars();
            matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
                && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        };
        (ok(o) && ok(a)).then(|| Self::new(o, a))
    }
}

impl fmt::Display for AttrRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.object, self.attr)
    }
}

impl Serialize for AttrRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AttrRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        AttrRef::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad attribute reference {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    pub types: Vec<TypeDecl>,
    pub objects: Vec<ObjectDecl>,
    pub events: Vec<EventDecl>,
    pub intervals: Vec<IntervalDecl>,
    pub rules: Vec<Rule>,
    pub config: Vec<ConfigEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeKind {
    Number { range: Option<(f64, f64)> },
    Symbol { values: Vec<String> },
    Boolean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeDecl {
    pub name: String,
    pub kind: TypeKind,
    pub terms: Vec<(String, MembershipFunction)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttrDecl {
    pub name: String,
    pub ty: String,
    /// Assignments to output attributes are control actions.
    pub output: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectDecl {
    pub name: String,
    pub attrs: Vec<AttrDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventDecl {
    pub name: String,
    pub origin: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalDecl {
    pub name: String,
    pub open: Expr,
    pub close: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleKind {
    Conventional,
    /// Active at ticks divisible by the period.
    Periodic(u64),
    /// Active at ticks where the named event originates.
    Response(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub target: AttrRef,
    pub value: Arith,
    pub cf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub kind: RuleKind,
    pub cf: f64,
    pub condition: Option<Expr>,
    pub temporal: Option<TemporalFormula>,
    pub actions: Vec<Action>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigValue {
    Number(f64),
    Ident(String),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: ConfigValue,
    pub span: Span,
}

/// Static (non-temporal) logical expression over object attributes.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Cmp {
        op: CmpOp,
        lhs: Arith,
        rhs: Arith,
    },
    /// A boolean attribute used directly as a condition.
    Truthy(AttrRef),
    Const(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arith {
    Lit(Value),
    Ref(AttrRef),
    Neg(Box<Arith>),
    Bin(ArithOp, Box<Arith>, Box<Arith>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AllenRel {
    Before,
    After,
    Meets,
    Overlaps,
    Starts,
    During,
    Equals,
    Finishes,
}

impl AllenRel {
    pub const ALL: [AllenRel; 8] = [
        AllenRel::Before,
        AllenRel::After,
        AllenRel::Meets,
        AllenRel::Overlaps,
        AllenRel::Starts,
        AllenRel::During,
        AllenRel::Equals,
        AllenRel::Finishes,
    ];

    pub fn letter(self) -> char {
        match self {
            AllenRel::Before => 'b',
            AllenRel::After => 'a',
            AllenRel::Meets => 'm',
            AllenRel::Overlaps => 'o',
            AllenRel::Starts => 's',
            AllenRel::During => 'd',
            AllenRel::Equals => 'e',
            AllenRel::Finishes => 'f',
        }
    }

    pub fn from_letter(s: &str) -> Option<Self> {
        AllenRel::ALL.into_iter().find(|r| s.len() == 1 && s.starts_with(r.letter()))
    }

    /// Whether the connective may join operands of the given kinds.
    pub fn allowed(self, lhs: TemporalKind, rhs: TemporalKind) -> bool {
        use AllenRel::*;
        use TemporalKind::*;
        match (lhs, rhs) {
            (Interval, Interval) => true,
            (Event, Event) => matches!(self, Before | After | Equals),
            (Event, Interval) => matches!(self, Before | After | Starts | During | Finishes),
            (Interval, Event) => false,
        }
    }
}

impl fmt::Display for AllenRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalKind {
    Event,
    Interval,
}

/// `.c` (number of origins) or `.l` (duration).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemporalAttr {
    Count,
    Length,
}

impl TemporalAttr {
    pub fn letter(self) -> char {
        match self {
            TemporalAttr::Count => 'c',
            TemporalAttr::Length => 'l',
        }
    }
}

/// Formula of the modified interval logic.
#[derive(Debug, Clone, PartialEq)]
pub enum TemporalFormula {
    Var(String),
    Rel { lhs: String, rel: AllenRel, rhs: String },
    Attr { var: String, attr: TemporalAttr, op: CmpOp, value: i64 },
    Not(Box<TemporalFormula>),
    And(Box<TemporalFormula>, Box<TemporalFormula>),
    Or(Box<TemporalFormula>, Box<TemporalFormula>),
}

impl Expr {
    /// Atoms in left-to-right order.
    pub fn atoms(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Expr::Not(a) => a.collect_atoms(out),
            atom => out.push(atom),
        }
    }

    /// Attribute references in left-to-right order (with repeats).
    pub fn refs(&self) -> Vec<&AttrRef> {
        let mut out = Vec::new();
        for atom in self.atoms() {
            match atom {
                Expr::Cmp { lhs, rhs, .. } => {
                    lhs.collect_refs(&mut out);
                    rhs.collect_refs(&mut out);
                }
                Expr::Truthy(r) => out.push(r),
                _ => {}
            }
        }
        out
    }
}

impl Arith {
    pub fn refs(&self) -> Vec<&AttrRef> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a AttrRef>) {
        match self {
            Arith::Lit(_) => {}
            Arith::Ref(r) => out.push(r),
            Arith::Neg(a) => a.collect_refs(out),
            Arith::Bin(_, a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
        }
    }
}

impl TemporalFormula {
    pub fn atoms(&self) -> Vec<&TemporalFormula> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a TemporalFormula>) {
        match self {
            TemporalFormula::And(a, b) | TemporalFormula::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            TemporalFormula::Not(a) => a.collect_atoms(out),
            atom => out.push(atom),
        }
    }

    /// Temporal object names mentioned, in order of appearance.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for atom in self.atoms() {
            match atom {
                TemporalFormula::Var(v) | TemporalFormula::Attr { var: v, .. } => out.push(v.as_str()),
                TemporalFormula::Rel { lhs, rhs, .. } => {
                    out.push(lhs.as_str());
                    out.push(rhs.as_str());
                }
                _ => {}
            }
        }
        out
    }
}

impl Rule {
    /// Count of atomic conditions across both LHS fragments.
    pub fn specificity(&self) -> usize {
        self.condition.as_ref().map_or(0, |e| e.atoms().len()) + self.temporal.as_ref().map_or(0, |t| t.atoms().len())
    }

    pub fn concludes(&self, r: &AttrRef) -> bool {
        self.actions.iter().any(|a| &a.target == r)
    }
}

impl KnowledgeBase {
    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn temporal_kind(&self, name: &str) -> Option<TemporalKind> {
        if self.events.iter().any(|e| e.name == name) {
            Some(TemporalKind::Event)
        } else if self.intervals.iter().any(|i| i.name == name) {
            Some(TemporalKind::Interval)
        } else {
            None
        }
    }

    pub fn type_decl(&self, name: &str) -> Option<&TypeDecl> {
        self.types.iter().find(|t| t.name == name)
    }

    pub fn attr_decl(&self, r: &AttrRef) -> Option<&AttrDecl> {
        self.objects.iter().find(|o| o.name == r.object)?.attrs.iter().find(|a| a.name == r.attr)
    }

    /// Declared attribute references in declaration order.
    pub fn declared_refs(&self) -> Vec<AttrRef> {
        self.objects.iter().flat_map(|o| o.attrs.iter().map(move |a| AttrRef::new(&o.name, &a.name))).collect()
    }
}
