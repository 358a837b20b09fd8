//! The five-phase tick cycle: active rule selection (A), matching (S″),
//! conflict resolution (K), firing (W′) and defuzzification (D).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::kb::{AttrId, AttrRef, CompiledKb, RuleKind};
use crate::par;
use crate::temporal::{Anomaly, Interpretation, OriginKind, OriginNote, Timeline};
use crate::values::{defuzzify, MembershipFunction, Payload, TruthValue, Value};
use crate::wm::{Blackboard, ControlAction, DiffEntry, EvalCache, Provenance, WorkingMemory};

use super::conflict::{ConflictSet, Instantiation, RankTuple, Signature};
use super::eval::{check_value, ArithFailure, Env, NewEntries};
use super::{ConflictPersistence, EngineConfig, EngineError, FiringMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub attr: AttrRef,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiredRecord {
    pub rule: String,
    pub truth: TruthValue,
    pub rank: RankTuple,
    pub actions: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefuzzRecord {
    pub attr: AttrRef,
    /// Centroid of every mode, ascending.
    pub values: Vec<f64>,
    pub primary: f64,
}

/// Observable outcome of one tick, in phase order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub origins: Vec<OriginNote>,
    pub anomalies: Vec<Anomaly>,
    pub fired: Vec<FiredRecord>,
    pub wm_diff: Vec<DiffEntry>,
    pub control_actions: Vec<ControlAction>,
    pub defuzz_modes: Vec<DefuzzRecord>,
    pub flags: Vec<String>,
}

pub const FLAG_MAX_FIRINGS: &str = "max_firings_reached";

/// Read-only view of one conflict-set entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictEntry {
    pub rule: String,
    pub truth: TruthValue,
    pub rank: RankTuple,
}

/// Complete state of one forward-chaining session.
#[derive(Debug, Clone)]
pub struct EngineState {
    kb: Arc<CompiledKb>,
    config: EngineConfig,
    wm: WorkingMemory,
    interp: Interpretation,
    cache: EvalCache,
    conflict: ConflictSet,
    blackboard: Blackboard,
    next_tick: u64,
}

struct MatchOutput {
    inst: Option<Instantiation>,
    fresh: NewEntries,
    stats: (u64, u64),
}

impl EngineState {
    pub fn new(kb: Arc<CompiledKb>, config: EngineConfig) -> Result<Self, EngineError> {
        config.validate().map_err(EngineError::Config)?;
        Ok(Self {
            wm: WorkingMemory::new(&kb),
            interp: Interpretation::new(&kb),
            cache: EvalCache::default(),
            conflict: ConflictSet::default(),
            blackboard: Blackboard::default(),
            next_tick: 0,
            config,
            kb,
        })
    }

    pub fn kb(&self) -> &CompiledKb {
        &self.kb
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn wm(&self) -> &WorkingMemory {
        &self.wm
    }

    pub fn interpretation(&self) -> &Interpretation {
        &self.interp
    }

    pub fn timeline(&self) -> Timeline {
        self.interp.timeline()
    }

    pub fn cache(&self) -> &EvalCache {
        &self.cache
    }

    /// The tick the next call to [`Self::run_cycle`] will process.
    pub fn next_tick(&self) -> u64 {
        self.next_tick
    }

    pub fn conflict_set(&self) -> Vec<ConflictEntry> {
        self.conflict
            .items()
            .iter()
            .map(|i| ConflictEntry { rule: self.kb.rules[i.rule].name.clone(), truth: i.truth, rank: i.rank })
            .collect()
    }

    /// Runs one tick with the given external assertions.
    pub fn run_cycle(&mut self, external: &[(AttrRef, Value)]) -> Result<TickRecord, EngineError> {
        let tick = self.next_tick;
        let kb = Arc::clone(&self.kb);
        let mut ids = Vec::with_capacity(external.len());
        for (attr, value) in external {
            let id = kb.attr_id(attr).ok_or_else(|| EngineError::UndeclaredRef { tick, attr: attr.clone() })?;
            check_value(&kb, id, value).map_err(|message| EngineError::TypeMismatch {
                tick,
                attr: attr.clone(),
                message,
            })?;
            ids.push(id);
        }
        let before = self.wm.snapshot();
        let conflicts_before = self.wm.conflicts().len();
        for (id, (_, value)) in ids.into_iter().zip(external) {
            self.wm.assert_fact(id, value.clone(), tick, Provenance::External)?;
        }

        let env = Env { kb: &kb, wm: &self.wm, cfg: &self.config };
        let seen = self.interp.interpret_tick(&kb, tick, self.config.theta_fire, |e| env.node(e, 0))?;
        for o in seen.origins {
            self.blackboard.post_origin(o);
        }
        let origins = self.blackboard.drain_origins();

        if self.config.conflict_persistence == ConflictPersistence::Tick {
            self.conflict.clear_items();
        }
        let mut fired = Vec::new();
        let mut flags = Vec::new();
        loop {
            let active = self.select_active(tick, &origins);
            self.match_and_resolve(&active, tick);
            if fired.len() >= self.config.max_firings {
                if !self.conflict.items().is_empty() {
                    flags.push(FLAG_MAX_FIRINGS.to_string());
                }
                break;
            }
            let Some(inst) = self.conflict.take_head() else { break };
            match self.fire(&inst, tick) {
                Ok(rec) => fired.push(rec),
                Err(msg) => flags.push(format!("fire_aborted:{}:{msg}", kb.rules[inst.rule].name)),
            }
            if self.config.firing_mode == FiringMode::Single {
                break;
            }
        }

        let defuzz_modes = self.defuzzify_phase(tick);
        for c in &self.wm.conflicts()[conflicts_before..] {
            flags.push(format!("assert_conflict:{}", c.attr));
        }
        let wm_diff = self.wm.snapshot_diff(&before, &self.wm.snapshot());
        self.next_tick += 1;
        Ok(TickRecord {
            tick,
            origins,
            anomalies: seen.anomalies,
            fired,
            wm_diff,
            control_actions: self.blackboard.drain_control(),
            defuzz_modes,
            flags,
        })
    }

    /// Phase A.
    fn select_active(&self, tick: u64, origins: &[OriginNote]) -> Vec<usize> {
        self.kb
            .rules
            .iter()
            .filter(|r| match &r.kind {
                RuleKind::Conventional => true,
                RuleKind::Periodic(p) => tick.is_multiple_of(*p),
                RuleKind::Response(e) => {
                    origins.iter().any(|o| &o.name == e && matches!(o.kind, OriginKind::Event | OriginKind::Open))
                }
            })
            .map(|r| r.index)
            .collect()
    }

    fn signature(&self, rule: usize, tick: u64) -> Signature {
        let r = &self.kb.rules[rule];
        Signature {
            rule,
            deps: r.deps.iter().map(|&d| (d, self.wm.serial_of(d))).collect(),
            temporal: self.interp.state_key(&r.temporal_vars),
            activation: (!matches!(r.kind, RuleKind::Conventional)).then_some(tick),
        }
    }

    fn match_rule(&self, rule: usize, tick: u64) -> MatchOutput {
        let r = &self.kb.rules[rule];
        let env = Env { kb: &self.kb, wm: &self.wm, cfg: &self.config };
        let mut fresh = Vec::new();
        let mut stats = (0, 0);
        let cond = match &r.condition {
            None => TruthValue::TRUE,
            Some(c) if self.config.use_cache => env.node_cached(rule, c, 0, &self.cache, &mut fresh, &mut stats),
            Some(c) => env.node(c, 0),
        };
        let temporal = r.temporal.as_ref().map_or(TruthValue::TRUE, |f| self.interp.eval(f, tick));
        let truth = cond.and(temporal);
        let inst = match truth.known() {
            Some(t) if t >= self.config.theta_fire => {
                let signature = self.signature(rule, tick);
                (!self.conflict.has_fired(&signature)).then(|| Instantiation {
                    rule,
                    truth,
                    rank: RankTuple {
                        specificity: r.specificity,
                        novelty: r.deps.iter().filter_map(|&d| self.wm.lookup(d).map(|f| f.asserted_at)).max(),
                        reliability: r.cf * t,
                        index: rule,
                    },
                    signature,
                })
            }
            _ => None,
        };
        MatchOutput { inst, fresh, stats }
    }

    /// Phases S″ and K.
    fn match_and_resolve(&mut self, active: &[usize], tick: u64) {
        let outputs = par::map(active, self.config.parallel, |&rule| self.match_rule(rule, tick));
        let mut fresh_insts = Vec::new();
        let valid_as_of = self.wm.serial();
        for out in outputs {
            for (key, truth, deps) in out.fresh {
                self.cache.insert(key, truth, &deps, valid_as_of);
            }
            self.cache.record(out.stats.0, out.stats.1);
            fresh_insts.extend(out.inst);
        }
        let current: Vec<Signature> = self.conflict.items().iter().map(|i| self.signature(i.rule, tick)).collect();
        let still_valid: Vec<bool> = self
            .conflict
            .items()
            .iter()
            .zip(&current)
            .map(|(i, sig)| active.contains(&i.rule) && *sig == i.signature)
            .collect();
        self.conflict.resolve(fresh_insts, &still_valid);
    }

    /// Phase W′. All right-hand sides are evaluated before any assertion so
    /// an error leaves memory untouched.
    fn fire(&mut self, inst: &Instantiation, tick: u64) -> Result<FiredRecord, String> {
        let kb = Arc::clone(&self.kb);
        let rule = &kb.rules[inst.rule];
        let truth = inst.truth.known().expect("instantiations carry known truth");
        let env = Env { kb: &kb, wm: &self.wm, cfg: &self.config };
        let mut values = Vec::with_capacity(rule.actions.len());
        for a in &rule.actions {
            let ctx = env.ctx(Some(a.target));
            let v = env.arith(&a.value, &ctx).map_err(|e| match e {
                ArithFailure::Missing(id) => format!("missing value for {}", kb.attr(id).attr),
                ArithFailure::Value(e) => e.to_string(),
            })?;
            check_value(&kb, a.target, &v)?;
            let certainty = (rule.cf * truth * a.cf * v.certainty).clamp(0.0, 1.0);
            values.push((a.target, Value { certainty, ..v }));
        }
        let mut actions = Vec::with_capacity(values.len());
        for (id, value) in values {
            self.wm
                .assert_fact(id, value.clone(), tick, Provenance::Rule(rule.name.clone()))
                .map_err(|e| e.to_string())?;
            let attr = kb.attr(id).attr.clone();
            if kb.attr(id).output {
                self.blackboard.post_control(ControlAction {
                    attr: attr.clone(),
                    value: value.clone(),
                    rule: rule.name.clone(),
                });
            }
            actions.push(Assignment { attr, value });
        }
        Ok(FiredRecord { rule: rule.name.clone(), truth: inst.truth, rank: inst.rank, actions })
    }

    /// Phase D: facts derived this tick that hold a membership function are
    /// replaced by their primary defuzzified value.
    fn defuzzify_phase(&mut self, tick: u64) -> Vec<DefuzzRecord> {
        let mut out = Vec::new();
        let targets: Vec<(AttrId, MembershipFunction, f64)> = self
            .kb
            .attrs
            .iter()
            .enumerate()
            .filter_map(|(id, _)| {
                let f = self.wm.lookup(id)?;
                match (&f.value.payload, &f.provenance) {
                    (Payload::Fuzzy(mf), Provenance::Rule(_)) if f.asserted_at == tick => {
                        Some((id, mf.clone(), f.value.certainty))
                    }
                    _ => None,
                }
            })
            .collect();
        for (id, mf, certainty) in targets {
            let d = defuzzify(&mf);
            self.wm.replace_value(id, Value { payload: Payload::Number(d.primary), certainty });
            out.push(DefuzzRecord { attr: self.kb.attr(id).attr.clone(), values: d.values, primary: d.primary });
        }
        out
    }
}
