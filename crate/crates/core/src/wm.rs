//! Working memory, antecedent-evaluation cache and the dynamic blackboard.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{AttrId, AttrRef, CompiledKb};
use crate::temporal::OriginNote;
use crate::values::{combine_cf, TruthValue, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WmError {
    #[error("undeclared attribute id {0}")]
    Undeclared(AttrId),
    #[error("assertion at tick {got} after tick {current}")]
    TickRegression { current: u64, got: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    External,
    Rule(String),
    Answer(u64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fact {
    pub value: Value,
    pub asserted_at: u64,
    pub provenance: Provenance,
    /// Global assertion sequence number; orders every change to memory.
    #[serde(skip)]
    pub serial: u64,
}

/// Serials are bookkeeping local to one memory and take no part in equality.
impl PartialEq for Fact {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value && self.asserted_at == other.asserted_at && self.provenance == other.provenance
    }
}

/// A same-tick overwrite of a rule-derived fact with a different payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertConflict {
    pub attr: AttrRef,
    pub tick: u64,
    pub replaced: Value,
    pub by: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssertOutcome {
    Inserted,
    /// Equal payload from a second rule this tick; certainties combined.
    Merged,
    /// Different payload replaced a rule fact from this tick.
    Conflict,
    /// The current fact already holds this value at this tick.
    Unchanged,
}

#[derive(Debug, Clone)]
pub struct WorkingMemory {
    names: Vec<AttrRef>,
    current: Vec<Option<Fact>>,
    history: Vec<Vec<Fact>>,
    serial: u64,
    tick: u64,
    conflicts: Vec<AssertConflict>,
}

/// Current facts at one instant, indexed by attribute id.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot(Vec<Option<Fact>>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub attr: AttrRef,
    pub old: Option<Fact>,
    pub new: Option<Fact>,
    /// Facts asserted after the earlier snapshot and replaced before the
    /// later one, oldest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub superseded: Vec<Fact>,
}

impl WorkingMemory {
    pub fn new(kb: &CompiledKb) -> Self {
        let n = kb.attrs.len();
        Self {
            names: kb.attrs.iter().map(|a| a.attr.clone()).collect(),
            current: vec![None; n],
            history: vec![Vec::new(); n],
            serial: 0,
            tick: 0,
            conflicts: Vec::new(),
        }
    }

    pub fn assert_fact(
        &mut self,
        id: AttrId,
        value: Value,
        tick: u64,
        provenance: Provenance,
    ) -> Result<AssertOutcome, WmError> {
        if id >= self.current.len() {
            return Err(WmError::Undeclared(id));
        }
        if tick < self.tick {
            return Err(WmError::TickRegression { current: self.tick, got: tick });
        }
        self.tick = tick;
        let mut outcome = AssertOutcome::Inserted;
        if let Some(old) = &mut self.current[id] {
            let same_tick = old.asserted_at == tick;
            let same_tick_rule = same_tick && matches!(old.provenance, Provenance::Rule(_));
            if same_tick_rule
                && matches!(provenance, Provenance::Rule(_))
                && old.provenance != provenance
                && old.value.same_payload(&value)
            {
                let certainty = combine_cf(old.value.certainty, value.certainty);
                if certainty == old.value.certainty {
                    return Ok(AssertOutcome::Unchanged);
                }
                self.serial += 1;
                old.value.certainty = certainty;
                old.provenance = provenance;
                old.serial = self.serial;
                return Ok(AssertOutcome::Merged);
            }
            // restating the current value within a tick is not a change
            if same_tick && old.value == value {
                return Ok(AssertOutcome::Unchanged);
            }
            if same_tick_rule && !old.value.same_payload(&value) {
                self.conflicts.push(AssertConflict {
                    attr: self.names[id].clone(),
                    tick,
                    replaced: old.value.clone(),
                    by: provenance.clone(),
                });
                outcome = AssertOutcome::Conflict;
            }
        }
        self.serial += 1;
        let serial = self.serial;
        let fact = Fact { value, asserted_at: tick, provenance, serial };
        if let Some(old) = self.current[id].replace(fact) {
            self.history[id].push(old);
        }
        Ok(outcome)
    }

    /// Replaces the value of a current fact in place (defuzzification),
    /// archiving the previous one.
    pub fn replace_value(&mut self, id: AttrId, value: Value) {
        if let Some(old) = self.current[id].clone() {
            self.serial += 1;
            self.history[id].push(old.clone());
            self.current[id] = Some(Fact { value, serial: self.serial, ..old });
        }
    }

    pub fn lookup(&self, id: AttrId) -> Option<&Fact> {
        self.current.get(id)?.as_ref()
    }

    pub fn history(&self, id: AttrId) -> &[Fact] {
        &self.history[id]
    }

    /// Serial of the current fact, 0 when absent.
    pub fn serial_of(&self, id: AttrId) -> u64 {
        self.current[id].as_ref().map_or(0, |f| f.serial)
    }

    /// Latest serial handed out.
    pub fn serial(&self) -> u64 {
        self.serial
    }

    pub fn conflicts(&self) -> &[AssertConflict] {
        &self.conflicts
    }

    pub fn len(&self) -> usize {
        self.current.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Current facts with their references, in reference-name order.
    pub fn facts(&self) -> impl Iterator<Item = (&AttrRef, &Fact)> {
        self.names.iter().zip(&self.current).filter_map(|(n, f)| f.as_ref().map(|f| (n, f)))
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot(self.current.clone())
    }

    /// Entries whose current fact differs between the snapshots, ordered by
    /// reference name. `self` must be the memory `after` was taken from.
    pub fn snapshot_diff(&self, before: &Snapshot, after: &Snapshot) -> Vec<DiffEntry> {
        let serial = |f: &Option<Fact>| f.as_ref().map_or(0, |f| f.serial);
        let mut out = Vec::new();
        for (id, (b, a)) in before.0.iter().zip(&after.0).enumerate() {
            let (sb, sa) = (serial(b), serial(a));
            if sb == sa {
                continue;
            }
            let superseded = self.history[id].iter().filter(|f| f.serial > sb && f.serial < sa).cloned().collect();
            out.push(DiffEntry { attr: self.names[id].clone(), old: b.clone(), new: a.clone(), superseded });
        }
        out
    }
}

#[derive(Debug, Clone)]
struct CacheEntry {
    truth: TruthValue,
    deps: Vec<AttrId>,
    valid_as_of: u64,
}

/// Per-node memo of partial antecedent evaluations, keyed by
/// `(rule index, node id)`.
#[derive(Debug, Clone, Default)]
pub struct EvalCache {
    entries: HashMap<(usize, usize), CacheEntry>,
    hits: u64,
    misses: u64,
}

impl EvalCache {
    /// Cached truth if no dependency changed since it was stored.
    pub fn get(&self, key: (usize, usize), wm: &WorkingMemory) -> Option<TruthValue> {
        let e = self.entries.get(&key)?;
        e.deps.iter().all(|&d| wm.serial_of(d) <= e.valid_as_of).then_some(e.truth)
    }

    pub fn insert(&mut self, key: (usize, usize), truth: TruthValue, deps: &[AttrId], valid_as_of: u64) {
        self.entries.insert(key, CacheEntry { truth, deps: deps.to_vec(), valid_as_of });
    }

    pub fn record(&mut self, hits: u64, misses: u64) {
        self.hits += hits;
        self.misses += misses;
    }

    pub fn stats(&self) -> (u64, u64) {
        (self.hits, self.misses)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlAction {
    pub attr: AttrRef,
    pub value: Value,
    pub rule: String,
}

/// A parameter the consultation needs from its user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: u64,
    pub attr: AttrRef,
    pub domain: String,
}

/// Transient exchange slots between solver components. Draining removes
/// the entries, so each is consumed exactly once.
#[derive(Debug, Clone, Default)]
pub struct Blackboard {
    control: VecDeque<ControlAction>,
    questions: VecDeque<Question>,
    origins: VecDeque<OriginNote>,
}

impl Blackboard {
    pub fn post_control(&mut self, a: ControlAction) {
        self.control.push_back(a);
    }

    pub fn post_question(&mut self, q: Question) {
        self.questions.push_back(q);
    }

    pub fn post_origin(&mut self, o: OriginNote) {
        self.origins.push_back(o);
    }

    pub fn drain_control(&mut self) -> Vec<ControlAction> {
        self.control.drain(..).collect()
    }

    pub fn drain_questions(&mut self) -> Vec<Question> {
        self.questions.drain(..).collect()
    }

    pub fn drain_origins(&mut self) -> Vec<OriginNote> {
        self.origins.drain(..).collect()
    }

    pub fn peek_question(&self) -> Option<&Question> {
        self.questions.front()
    }
}
