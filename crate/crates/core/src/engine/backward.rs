//! Goal-driven consultation. Missing leaf parameters are asked one at a
//! time, ordered by the question heuristics:
//!
//! 1. usage frequency across rule antecedents, descending;
//! 2. size of the declared value domain, descending;
//! 3. leftmost position in a normalized antecedent, ascending;
//! 4. membership in a mutually exclusive evidence pair, preferred;
//!
//! with declaration order as the final tiebreak.
//!
//! A [`Consultation`] is a resumable state machine: every answer is asserted
//! and the derivation restarts from the accumulated facts.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{AttrId, AttrRef, CompiledKb, Expr};
use crate::temporal::Interpretation;
use crate::values::{CmpOp, TruthValue, Value};
use crate::wm::{Blackboard, Provenance, Question, WorkingMemory};

use super::conflict::{ConflictSet, Instantiation, RankTuple, Signature};
use super::eval::{check_value, Env};
use super::{EngineConfig, EngineError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Value(Value),
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question: Question,
    /// Every askable parameter at this point, in ranked order.
    pub candidates: Vec<AttrRef>,
    pub answer: Answer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub goal: AttrRef,
    /// `None` when the goal could not be determined.
    pub value: Option<Value>,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.value {
            Some(v) => {
                let bare = Value { certainty: 1.0, ..v.clone() };
                write!(f, "{} = {} (certainty {})", self.goal, bare, v.certainty)
            }
            None => f.write_str("undetermined"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status")]
pub enum Step {
    Ask { question: Question, candidates: Vec<AttrRef> },
    Done { outcome: Outcome },
}

/// Question log and final result of a finished consultation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub log: Vec<QuestionRecord>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsultError {
    #[error("no question is pending")]
    NoPendingQuestion,
    #[error("invalid answer: {0}")]
    InvalidAnswer(String),
}

#[derive(Debug, Clone)]
pub struct Consultation {
    kb: Arc<CompiledKb>,
    config: EngineConfig,
    goal: AttrId,
    wm: WorkingMemory,
    interp: Interpretation,
    conflict: ConflictSet,
    blackboard: Blackboard,
    unknown: BTreeSet<AttrId>,
    relevant: Vec<usize>,
    log: Vec<QuestionRecord>,
    pending: Option<(Question, Vec<AttrRef>)>,
    outcome: Option<Outcome>,
    next_id: u64,
}

impl Consultation {
    pub fn new(kb: Arc<CompiledKb>, config: EngineConfig, goal: &AttrRef) -> Result<Self, EngineError> {
        config.validate().map_err(EngineError::Config)?;
        let goal_id = kb.attr_id(goal).ok_or_else(|| EngineError::UndeclaredRef { tick: 0, attr: goal.clone() })?;
        let relevant = relevant_rules(&kb, goal_id);
        let mut c = Self {
            wm: WorkingMemory::new(&kb),
            interp: Interpretation::new(&kb),
            conflict: ConflictSet::default(),
            blackboard: Blackboard::default(),
            unknown: BTreeSet::new(),
            relevant,
            log: vec![],
            pending: None,
            outcome: None,
            next_id: 1,
            goal: goal_id,
            config,
            kb,
        };
        c.advance();
        Ok(c)
    }

    /// The pending question or the final outcome.
    pub fn current(&self) -> Step {
        match (&self.pending, &self.outcome) {
            (Some((q, c)), _) => Step::Ask { question: q.clone(), candidates: c.clone() },
            (None, Some(o)) => Step::Done { outcome: o.clone() },
            (None, None) => unreachable!("consultation always rests on a question or an outcome"),
        }
    }

    pub fn pending(&self) -> Option<&Question> {
        self.pending.as_ref().map(|p| &p.0)
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn log(&self) -> &[QuestionRecord] {
        &self.log
    }

    pub fn wm(&self) -> &WorkingMemory {
        &self.wm
    }

    pub fn transcript(&self) -> Option<Transcript> {
        Some(Transcript { log: self.log.clone(), outcome: self.outcome.clone()? })
    }

    /// Parses a JSON answer: a value literal, or the string `"unknown"`.
    pub fn parse_answer(&self, json: &serde_json::Value) -> Result<Answer, ConsultError> {
        if json.as_str() == Some("unknown") {
            return Ok(Answer::Unknown);
        }
        let v = Value::from_literal(json).map_err(|e| ConsultError::InvalidAnswer(e.to_string()))?;
        Ok(Answer::Value(v))
    }

    /// Records an answer to the pending question and resumes.
    pub fn answer(&mut self, answer: Answer) -> Result<Step, ConsultError> {
        let Some((question, candidates)) = self.pending.clone() else {
            return Err(ConsultError::NoPendingQuestion);
        };
        let id = self.kb.attr_id(&question.attr).expect("asked attribute is declared");
        match &answer {
            Answer::Value(v) => {
                check_value(&self.kb, id, v).map_err(ConsultError::InvalidAnswer)?;
                self.wm
                    .assert_fact(id, v.clone(), 0, Provenance::Answer(question.id))
                    .expect("declared attribute at tick 0");
            }
            Answer::Unknown => {
                self.unknown.insert(id);
            }
        }
        self.blackboard.drain_questions();
        self.pending = None;
        self.log.push(QuestionRecord { question, candidates, answer });
        self.advance();
        Ok(self.current())
    }

    /// Derives as much as possible, then asks or concludes.
    fn advance(&mut self) {
        self.derive();
        if let Some(f) = self.wm.lookup(self.goal) {
            self.outcome = Some(Outcome { goal: self.kb.attr(self.goal).attr.clone(), value: Some(f.value.clone()) });
            return;
        }
        let candidates = self.candidates();
        if candidates.is_empty() {
            self.outcome = Some(Outcome { goal: self.kb.attr(self.goal).attr.clone(), value: None });
            return;
        }
        let ranked = rank_question_candidates(&candidates, &self.kb);
        let attr = ranked[0];
        let question = Question {
            id: self.next_id,
            attr: self.kb.attr(attr).attr.clone(),
            domain: self.kb.type_of(attr).describe(),
        };
        self.next_id += 1;
        self.blackboard.post_question(question.clone());
        let names = ranked.iter().map(|&a| self.kb.attr(a).attr.clone()).collect();
        self.pending = Some((question, names));
    }

    fn env(&self) -> Env<'_> {
        Env { kb: &self.kb, wm: &self.wm, cfg: &self.config }
    }

    fn rule_truth(&self, rule: usize) -> TruthValue {
        let r = &self.kb.rules[rule];
        let cond = r.condition.as_ref().map_or(TruthValue::TRUE, |c| self.env().node(c, 0));
        let temporal = r.temporal.as_ref().map_or(TruthValue::TRUE, |f| self.interp.eval(f, 0));
        cond.and(temporal)
    }

    /// Fires relevant rules to quiescence, best-ranked first.
    fn derive(&mut self) {
        for _ in 0..self.config.max_firings {
            let mut fresh = Vec::new();
            for &rule in &self.relevant {
                let truth = self.rule_truth(rule);
                let Some(t) = truth.known().filter(|&t| t >= self.config.theta_fire) else { continue };
                let r = &self.kb.rules[rule];
                let signature = Signature {
                    rule,
                    deps: r.deps.iter().map(|&d| (d, self.wm.serial_of(d))).collect(),
                    temporal: vec![],
                    activation: None,
                };
                if self.conflict.has_fired(&signature) {
                    continue;
                }
                let rank = RankTuple {
                    specificity: r.specificity,
                    novelty: r.deps.iter().filter_map(|&d| self.wm.lookup(d).map(|f| f.asserted_at)).max(),
                    reliability: r.cf * t,
                    index: rule,
                };
                fresh.push(Instantiation { rule, truth, rank, signature });
            }
            self.conflict.resolve(fresh, &[]);
            let Some(inst) = self.conflict.take_head() else { return };
            self.fire(&inst);
        }
    }

    fn fire(&mut self, inst: &Instantiation) {
        let kb = Arc::clone(&self.kb);
        let r = &kb.rules[inst.rule];
        let t = inst.truth.known().unwrap_or(0.0);
        let env = Env { kb: &kb, wm: &self.wm, cfg: &self.config };
        let mut values = Vec::new();
        for a in &r.actions {
            let ctx = env.ctx(Some(a.target));
            let Ok(v) = env.arith(&a.value, &ctx) else { return };
            if check_value(&kb, a.target, &v).is_err() {
                return;
            }
            let certainty = (r.cf * t * a.cf * v.certainty).clamp(0.0, 1.0);
            values.push((a.target, Value { certainty, ..v }));
        }
        for (id, v) in values {
            let _ = self.wm.assert_fact(id, v, 0, Provenance::Rule(r.name.clone()));
        }
    }

    /// Askable parameters reachable from the goal through rules that are
    /// neither satisfied nor rejected yet.
    fn candidates(&self) -> Vec<AttrId> {
        let mut out = BTreeSet::new();
        let mut seen = HashSet::new();
        self.visit(self.goal, &mut seen, &mut out);
        out.into_iter().collect()
    }

    fn visit(&self, attr: AttrId, seen: &mut HashSet<AttrId>, out: &mut BTreeSet<AttrId>) {
        if !seen.insert(attr) || self.wm.lookup(attr).is_some() || self.unknown.contains(&attr) {
            return;
        }
        if !self.kb.is_concluded(attr) {
            out.insert(attr);
            return;
        }
        for &rule in &self.relevant {
            let r = &self.kb.rules[rule];
            if !r.actions.iter().any(|a| a.target == attr) || !self.rule_truth(rule).is_ne() {
                continue;
            }
            for &d in &r.deps {
                self.visit(d, seen, out);
            }
        }
    }
}

/// Rules that can contribute to `goal`: those concluding it and,
/// transitively, those concluding anything their antecedents read.
fn relevant_rules(kb: &CompiledKb, goal: AttrId) -> Vec<usize> {
    let mut wanted = vec![goal];
    let mut seen_attrs = HashSet::from([goal]);
    let mut rules = BTreeSet::new();
    while let Some(a) = wanted.pop() {
        for r in &kb.rules {
            if r.actions.iter().any(|x| x.target == a) && rules.insert(r.index) {
                for &d in &r.deps {
                    if seen_attrs.insert(d) {
                        wanted.push(d);
                    }
                }
            }
        }
    }
    rules.into_iter().collect()
}

/// Ranking features of one candidate parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionFeatures {
    pub frequency: usize,
    pub domain_size: f64,
    pub leftmost: usize,
    pub mutex: bool,
    pub declaration: usize,
}

pub fn question_features(attr: AttrId, kb: &CompiledKb) -> QuestionFeatures {
    let target = &kb.attr(attr).attr;
    let mut frequency = 0;
    let mut leftmost = usize::MAX;
    for rule in &kb.kb.rules {
        let Some(cond) = &rule.condition else { continue };
        let atoms = cond.atoms();
        if let Some(pos) = atoms.iter().position(|a| atom_mentions(a, target)) {
            frequency += 1;
            leftmost = leftmost.min(pos);
        }
    }
    let declaration = kb.kb.declared_refs().iter().position(|r| r == target).unwrap_or(usize::MAX);
    QuestionFeatures {
        frequency,
        domain_size: kb.type_of(attr).domain_size(),
        leftmost,
        mutex: in_mutex_pair(kb, target),
        declaration,
    }
}

/// Orders candidates by the question heuristics.
pub fn rank_question_candidates(candidates: &[AttrId], kb: &CompiledKb) -> Vec<AttrId> {
    let mut keyed: Vec<(QuestionFeatures, AttrId)> =
        candidates.iter().map(|&c| (question_features(c, kb), c)).collect();
    keyed.sort_by(|(a, _), (b, _)| {
        b.frequency
            .cmp(&a.frequency)
            .then_with(|| b.domain_size.total_cmp(&a.domain_size))
            .then_with(|| a.leftmost.cmp(&b.leftmost))
            .then_with(|| b.mutex.cmp(&a.mutex))
            .then_with(|| a.declaration.cmp(&b.declaration))
    });
    keyed.into_iter().map(|(_, c)| c).collect()
}

fn atom_mentions(atom: &Expr, target: &AttrRef) -> bool {
    match atom {
        Expr::Cmp { lhs, rhs, .. } => lhs.refs().into_iter().chain(rhs.refs()).any(|r| r == target),
        Expr::Truthy(r) => r == target,
        _ => false,
    }
}

/// Atoms with their polarity (true = not under an odd number of `~`).
fn polar_atoms(e: &Expr, positive: bool, out: &mut Vec<(Expr, bool)>) {
    match e {
        Expr::And(a, b) | Expr::Or(a, b) => {
            polar_atoms(a, positive, out);
            polar_atoms(b, positive, out);
        }
        Expr::Not(a) => polar_atoms(a, !positive, out),
        atom => out.push((atom.clone(), positive)),
    }
}

/// Canonical positive form of an atom: `a != x` is `~(a = x)`, `a <= x`
/// is `~(a > x)` and `a >= x` is `~(a < x)`.
fn canonical(atom: Expr, positive: bool) -> (Expr, bool) {
    match atom {
        Expr::Cmp { op, lhs, rhs } => {
            let (op, flipped) = match op {
                CmpOp::Ne => (CmpOp::Eq, true),
                CmpOp::Le => (CmpOp::Gt, true),
                CmpOp::Ge => (CmpOp::Lt, true),
                other => (other, false),
            };
            (Expr::Cmp { op, lhs, rhs }, positive != flipped)
        }
        other => (other, positive),
    }
}

/// Whether `target` appears in an atom used positively by one rule and
/// negatively by another, the pattern `a & B → H_m`, `~a & C → H_n`.
fn in_mutex_pair(kb: &CompiledKb, target: &AttrRef) -> bool {
    let per_rule: Vec<Vec<(Expr, bool)>> = kb
        .kb
        .rules
        .iter()
        .map(|r| {
            let mut atoms = Vec::new();
            if let Some(c) = &r.condition {
                polar_atoms(c, true, &mut atoms);
            }
            atoms.into_iter().filter(|(a, _)| atom_mentions(a, target)).map(|(a, p)| canonical(a, p)).collect()
        })
        .collect();
    per_rule.iter().enumerate().any(|(i, xs)| {
        per_rule
            .iter()
            .enumerate()
            .any(|(j, ys)| i != j && xs.iter().any(|(a, p)| ys.iter().any(|(b, q)| a == b && p != q)))
    })
}

/// Runs a consultation to completion with a callback answer source.
pub fn backward_chain(
    kb: Arc<CompiledKb>,
    config: EngineConfig,
    goal: &AttrRef,
    mut answers: impl FnMut(&Question) -> Answer,
) -> Result<Transcript, EngineError> {
    let mut c = Consultation::new(kb, config, goal)?;
    while let Some(q) = c.pending().cloned() {
        let a = answers(&q);
        if c.answer(a).is_err() {
            c.answer(Answer::Unknown).expect("question pending");
        }
    }
    Ok(c.transcript().expect("finished"))
}
