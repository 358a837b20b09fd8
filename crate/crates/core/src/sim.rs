//! Scenario-driven tick driver, trace persistence and replay checking.
//!
//! Scenarios and traces are line-delimited JSON. A scenario line is
//! `{"tick": N, "set": {"obj.attr": <literal>}}`; a trace is a header line
//! followed by one [`TickRecord`] per tick. Field order is fixed by the
//! record types and numbers round-trip exactly, so two runs over the same
//! inputs produce byte-identical traces.

use std::io::{self, BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{EngineConfig, EngineError, EngineState, TickRecord};
use crate::kb::{AttrRef, CompiledKb};
use crate::par;
use crate::values::Value;

pub const TRACE_FORMAT: &str = "chronorule-trace/1";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: non-ascending tick {got} after {prev}")]
    NonAscending { line: usize, prev: u64, got: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{what} hash mismatch: trace has {expected}, input has {actual}")]
    HashMismatch { what: &'static str, expected: String, actual: String },
}

/// External assertions for one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioEntry {
    pub tick: u64,
    pub set: Vec<(AttrRef, Value)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub entries: Vec<ScenarioEntry>,
}

impl Scenario {
    /// Parses scenario text. Blank lines are skipped. Assertions within a
    /// line are ordered by attribute name.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut entries: Vec<ScenarioEntry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let bad = |message: String| SimError::Malformed { line, message };
            let json: Json = serde_json::from_str(raw).map_err(|e| bad(e.to_string()))?;
            let obj = json.as_object().ok_or_else(|| bad("expected an object".into()))?;
            if let Some(k) = obj.keys().find(|k| *k != "tick" && *k != "set") {
                return Err(bad(format!("unknown field `{k}`")));
            }
            let tick = obj
                .get("tick")
                .and_then(Json::as_u64)
                .ok_or_else(|| bad("`tick` must be a non-negative integer".into()))?;
            let mut set = Vec::new();
            match obj.get("set") {
                None => {}
                Some(Json::Object(map)) => {
                    for (k, v) in map {
                        let attr = AttrRef::parse(k).ok_or_else(|| bad(format!("bad attribute reference {k:?}")))?;
                        let value = Value::from_literal(v).map_err(|e| bad(format!("{k}: {e}")))?;
                        set.push((attr, value));
                    }
                }
                Some(_) => return Err(bad("`set` must be an object".into())),
            }
            if let Some(prev) = entries.last() {
                if tick <= prev.tick {
                    return Err(SimError::NonAscending { line, prev: prev.tick, got: tick });
                }
            }
            set.sort_by(|a, b| a.0.cmp(&b.0));
            entries.push(ScenarioEntry { tick, set });
        }
        Ok(Self { entries })
    }

    pub fn assertions_at(&self, tick: u64) -> &[(AttrRef, Value)] {
        self.entries.binary_search_by_key(&tick, |e| e.tick).map_or(&[], |i| self.entries[i].set.as_slice())
    }

    /// Canonical serialization, one line per entry.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let set: serde_json::Map<String, Json> =
                e.set.iter().map(|(a, v)| (a.to_string(), v.to_literal())).collect();
            out.push_str(&json!({ "tick": e.tick, "set": set }).to_string());
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, SimError> {
    Scenario::parse(&std::fs::read_to_string(path)?)
}

/// Engine configuration for a KB: defaults, then the KB's `config` block,
/// then an optional JSON sidecar.
pub fn resolve_config(kb: &CompiledKb, sidecar: Option<&Json>) -> Result<EngineConfig, String> {
    let cfg = EngineConfig::default().apply_entries(&kb.kb.config).map_err(|(span, msg)| format!("{span}: {msg}"))?;
    match sidecar {
        Some(j) => cfg.merge_json(j),
        None => Ok(cfg),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub kb_hash: String,
    pub scenario_hash: String,
    pub config: EngineConfig,
    pub ticks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub records: Vec<TickRecord>,
}

impl Trace {
    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        let mut w = TraceWriter::new(&mut buf, &self.header).expect("writing to memory");
        for r in &self.records {
            w.record(r).expect("writing to memory");
        }
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn parse(text: &str) -> Result<Self, SimError> {
        let (header, lines) = split_trace(text)?;
        let records = lines
            .iter()
            .map(|(line, raw)| {
                serde_json::from_str(raw).map_err(|e| SimError::Malformed { line: *line, message: e.to_string() })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { header, records })
    }
}

/// Numbered record lines of a trace body.
type RecordLines<'a> = Vec<(usize, &'a str)>;

fn split_trace(text: &str) -> Result<(TraceHeader, RecordLines<'_>), SimError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (line, first) = lines.next().ok_or(SimError::Malformed { line: 1, message: "missing header".into() })?;
    let header: TraceHeader =
        serde_json::from_str(first).map_err(|e| SimError::Malformed { line, message: e.to_string() })?;
    if header.format != TRACE_FORMAT {
        return Err(SimError::Malformed { line, message: format!("unsupported format {:?}", header.format) });
    }
    Ok((header, lines.collect()))
}

/// Streams a trace as it is produced.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, header: &TraceHeader) -> io::Result<Self> {
        serde_json::to_writer(&mut out, header)?;
        out.write_all(b"\n")?;
        Ok(Self { out })
    }

    pub fn record(&mut self, r: &TickRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, r)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }
}

pub fn trace_header(kb: &CompiledKb, scenario: &Scenario, ticks: u64, config: &EngineConfig) -> TraceHeader {
    TraceHeader {
        format: TRACE_FORMAT.into(),
        kb_hash: kb.hash().to_string(),
        scenario_hash: scenario.hash(),
        config: config.clone(),
        ticks,
    }
}

/// Runs ticks `0..ticks`, handing each record to `sink` as soon as it exists.
pub fn simulate(
    kb: Arc<CompiledKb>,
    scenario: &Scenario,
    ticks: u64,
    config: EngineConfig,
    mut sink: impl FnMut(&TickRecord) -> Result<(), SimError>,
) -> Result<EngineState, SimError> {
    let mut state = EngineState::new(kb, config)?;
    for tick in 0..ticks {
        let rec = state.run_cycle(scenario.assertions_at(tick))?;
        sink(&rec)?;
    }
    Ok(state)
}

pub fn run_simulation(
    kb: Arc<CompiledKb>,
    scenario: &Scenario,
    ticks: u64,
    config: EngineConfig,
) -> Result<Trace, SimError> {
    let header = trace_header(&kb, scenario, ticks, &config);
    let mut records = Vec::with_capacity(ticks as usize);
    simulate(kb, scenario, ticks, config, |r| {
        records.push(r.clone());
        Ok(())
    })?;
    Ok(Trace { header, records })
}

/// Runs a simulation and streams its trace to `out`.
pub fn run_simulation_to<W: Write>(
    kb: Arc<CompiledKb>,
    scenario: &Scenario,
    ticks: u64,
    config: EngineConfig,
    out: W,
    mut on_record: impl FnMut(&TickRecord),
) -> Result<(), SimError> {
    let mut w = TraceWriter::new(out, &trace_header(&kb, scenario, ticks, &config))?;
    simulate(kb, scenario, ticks, config, |r| {
        w.record(r)?;
        on_record(r);
        Ok(())
    })?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayVerdict {
    Pass,
    /// First tick whose record differs, or is missing on either side.
    Diverged {
        tick: u64,
    },
}

/// Re-runs the simulation described by a trace and compares every record
/// byte for byte.
pub fn verify_replay(trace_text: &str, kb: Arc<CompiledKb>, scenario: &Scenario) -> Result<ReplayVerdict, SimError> {
    let (header, lines) = split_trace(trace_text)?;
    let check = |what, expected: &str, actual: String| {
        if expected == actual {
            Ok(())
        } else {
            Err(SimError::HashMismatch { what, expected: expected.to_string(), actual })
        }
    };
    check("kb", &header.kb_hash, kb.hash().to_string())?;
    check("scenario", &header.scenario_hash, scenario.hash())?;
    let config = EngineConfig { parallel: EngineConfig::default().parallel, ..header.config.clone() };
    let mut verdict = ReplayVerdict::Pass;
    let mut tick = 0u64;
    simulate(kb, scenario, header.ticks, config, |r| {
        if verdict == ReplayVerdict::Pass {
            let fresh = serde_json::to_string(r).expect("records serialize");
            if lines.get(tick as usize).map(|(_, l)| l.trim_end()) != Some(fresh.as_str()) {
                verdict = ReplayVerdict::Diverged { tick };
            }
        }
        tick += 1;
        Ok(())
    })?;
    if verdict == ReplayVerdict::Pass && lines.len() as u64 != header.ticks {
        verdict = ReplayVerdict::Diverged { tick: header.ticks.min(lines.len() as u64) };
    }
    Ok(verdict)
}

/// Reads a trace file and verifies it.
pub fn verify_replay_file(
    path: impl AsRef<Path>,
    kb: Arc<CompiledKb>,
    scenario: &Scenario,
) -> Result<ReplayVerdict, SimError> {
    let file = std::fs::File::open(path)?;
    let mut text = String::new();
    for line in io::BufReader::new(file).lines() {
        text.push_str(&line?);
        text.push('\n');
    }
    verify_replay(&text, kb, scenario)
}

/// One independent simulation in a batch.
#[derive(Debug, Clone)]
pub struct BatchJob {
    pub kb: Arc<CompiledKb>,
    pub scenario: Scenario,
    pub ticks: u64,
    pub config: EngineConfig,
}

/// Runs independent simulations, in parallel when `parallel` is set and
/// the feature is compiled in. Results keep the input order.
pub fn run_batch(jobs: &[BatchJob], parallel: bool) -> Vec<Result<Trace, SimError>> {
    par::map(jobs, parallel, |j| run_simulation(Arc::clone(&j.kb), &j.scenario, j.ticks, j.config.clone()))
}
