//! Event-flow interpretation over discrete ticks and evaluation of the
//! modified Allen logic.
//!
//! Origins are edge-triggered: an event originates at the tick where its
//! condition goes from unsatisfied (false, below threshold or `NE`) to
//! satisfied. Relations compare the most recent occurrence of each operand;
//! an interval that is still open ends at `now` provisionally.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{AllenRel, CExpr, CompiledKb, TemporalAttr, TemporalFormula, TemporalKind};
use crate::values::TruthValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("tick {got} does not follow tick {last:?}")]
    NonConsecutive { last: Option<u64>, got: u64 },
    #[error("connective {rel} not allowed between {lhs:?} and {rhs:?}")]
    IllTyped { rel: AllenRel, lhs: TemporalKind, rhs: TemporalKind },
}

/// An event origin (`end == Some(start)`) or an interval occurrence
/// (`end == None` while open).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Occurrence {
    pub start: u64,
    pub end: Option<u64>,
}

impl Occurrence {
    fn bounds(self, now: u64) -> (u64, u64) {
        (self.start, self.end.unwrap_or(now.max(self.start)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OriginKind {
    Event,
    Open,
    Close,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OriginNote {
    pub name: String,
    pub kind: OriginKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anomaly {
    pub name: String,
    pub tick: u64,
    pub message: String,
}

pub const CLOSE_BEFORE_OPEN: &str = "termination of an interval before its opening";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lane {
    pub name: String,
    pub kind: TemporalKind,
    pub occurrences: Vec<Occurrence>,
}

impl Lane {
    pub fn count(&self) -> usize {
        self.occurrences.len()
    }

    pub fn last(&self) -> Option<Occurrence> {
        self.occurrences.last().copied()
    }

    fn is_open(&self) -> bool {
        self.kind == TemporalKind::Interval && matches!(self.last(), Some(Occurrence { end: None, .. }))
    }
}

/// Timeline export consumed by traces and the session service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    pub now: Option<u64>,
    pub lanes: Vec<Lane>,
    pub anomalies: Vec<Anomaly>,
}

/// What one call to [`Interpretation::interpret_tick`] observed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TickInterpretation {
    pub origins: Vec<OriginNote>,
    pub anomalies: Vec<Anomaly>,
}

/// Placement of the declared events and intervals on the time axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpretation {
    lanes: Vec<Lane>,
    index: HashMap<String, usize>,
    prev_start: Vec<bool>,
    prev_close: Vec<bool>,
    anomalies: Vec<Anomaly>,
    last_tick: Option<u64>,
}

impl Interpretation {
    pub fn new(kb: &CompiledKb) -> Self {
        let lanes: Vec<Lane> =
            kb.temporal.iter().map(|t| Lane { name: t.name.clone(), kind: t.kind, occurrences: vec![] }).collect();
        let n = lanes.len();
        Self {
            index: lanes.iter().enumerate().map(|(i, l)| (l.name.clone(), i)).collect(),
            lanes,
            prev_start: vec![false; n],
            prev_close: vec![false; n],
            anomalies: vec![],
            last_tick: None,
        }
    }

    pub fn last_tick(&self) -> Option<u64> {
        self.last_tick
    }

    pub fn lane(&self, name: &str) -> Option<&Lane> {
        self.index.get(name).map(|&i| &self.lanes[i])
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn anomalies(&self) -> &[Anomaly] {
        &self.anomalies
    }

    pub fn timeline(&self) -> Timeline {
        Timeline { now: self.last_tick, lanes: self.lanes.clone(), anomalies: self.anomalies.clone() }
    }

    /// Advances the interpretation to `tick`, using `truth` to evaluate
    /// origin, open and close conditions against current data.
    pub fn interpret_tick(
        &mut self,
        kb: &CompiledKb,
        tick: u64,
        theta: f64,
        mut truth: impl FnMut(&CExpr) -> TruthValue,
    ) -> Result<TickInterpretation, TemporalError> {
        let expected = self.last_tick.map_or(0, |t| t + 1);
        if tick != expected {
            return Err(TemporalError::NonConsecutive { last: self.last_tick, got: tick });
        }
        self.last_tick = Some(tick);
        let mut out = TickInterpretation::default();
        for (i, decl) in kb.temporal.iter().enumerate() {
            let start_now = truth(&decl.start).at_least(theta);
            let start_edge = start_now && !self.prev_start[i];
            self.prev_start[i] = start_now;
            let lane = &mut self.lanes[i];
            match decl.kind {
                TemporalKind::Event => {
                    if start_edge {
                        lane.occurrences.push(Occurrence { start: tick, end: Some(tick) });
                        out.origins.push(OriginNote { name: lane.name.clone(), kind: OriginKind::Event });
                    }
                }
                TemporalKind::Interval => {
                    let close_now = decl.close.as_ref().is_some_and(|c| truth(c).at_least(theta));
                    let close_edge = close_now && !self.prev_close[i];
                    self.prev_close[i] = close_now;
                    if start_edge && !lane.is_open() {
                        lane.occurrences.push(Occurrence { start: tick, end: None });
                        out.origins.push(OriginNote { name: lane.name.clone(), kind: OriginKind::Open });
                    }
                    if close_edge {
                        if lane.is_open() {
                            lane.occurrences.last_mut().expect("open occurrence").end = Some(tick);
                            out.origins.push(OriginNote { name: lane.name.clone(), kind: OriginKind::Close });
                        } else {
                            out.anomalies.push(Anomaly {
                                name: lane.name.clone(),
                                tick,
                                message: CLOSE_BEFORE_OPEN.to_string(),
                            });
                        }
                    }
                }
            }
        }
        self.anomalies.extend(out.anomalies.iter().cloned());
        Ok(out)
    }

    /// Count and most recent occurrence of each listed lane; two equal keys
    /// mean a formula over those lanes sees the same history.
    pub fn state_key(&self, lanes: &[usize]) -> Vec<(usize, Option<Occurrence>)> {
        lanes.iter().map(|&i| (self.lanes[i].count(), self.lanes[i].last())).collect()
    }

    /// Evaluates a formula at tick `now`. Formulas are assumed validated.
    pub fn eval(&self, f: &TemporalFormula, now: u64) -> TruthValue {
        match f {
            TemporalFormula::Var(v) => {
                let Some(lane) = self.lane(v) else { return TruthValue::NE };
                match lane.last() {
                    None => TruthValue::NE,
                    Some(o) => {
                        let (s, e) = o.bounds(now);
                        TruthValue::from_bool(match lane.kind {
                            TemporalKind::Event => s == now,
                            TemporalKind::Interval => s <= now && now <= e,
                        })
                    }
                }
            }
            TemporalFormula::Rel { lhs, rel, rhs } => match (self.lane(lhs), self.lane(rhs)) {
                (Some(x), Some(y)) => {
                    relation_holds(*rel, (x.kind, x.last()), (y.kind, y.last()), now).unwrap_or(TruthValue::NE)
                }
                _ => TruthValue::NE,
            },
            TemporalFormula::Attr { var, attr, op, value } => {
                let Some(lane) = self.lane(var) else { return TruthValue::NE };
                let measured = match attr {
                    TemporalAttr::Count => Some(lane.count() as i64),
                    TemporalAttr::Length => length(lane, now),
                };
                match measured {
                    Some(m) => TruthValue::from_bool(op.holds(m, *value)),
                    None => TruthValue::NE,
                }
            }
            TemporalFormula::Not(a) => self.eval(a, now).not(),
            TemporalFormula::And(a, b) => self.eval(a, now).and(self.eval(b, now)),
            TemporalFormula::Or(a, b) => self.eval(a, now).or(self.eval(b, now)),
        }
    }
}

/// `.l`: zero for events, running length for an open interval, the last
/// completed length for a closed one, undefined if never opened.
fn length(lane: &Lane, now: u64) -> Option<i64> {
    match lane.kind {
        TemporalKind::Event => Some(0),
        TemporalKind::Interval => lane.last().map(|o| {
            let (s, e) = o.bounds(now);
            (e - s) as i64
        }),
    }
}

/// Allen relation between interval endpoints `x = [x1, x2]`, `y = [y1, y2]`.
pub fn interval_relation(rel: AllenRel, (x1, x2): (u64, u64), (y1, y2): (u64, u64)) -> bool {
    match rel {
        AllenRel::Before => x2 < y1,
        AllenRel::Meets => x2 == y1,
        AllenRel::Overlaps => x1 < y1 && y1 < x2 && x2 < y2,
        AllenRel::Starts => x1 == y1 && x2 < y2,
        AllenRel::During => y1 < x1 && x2 < y2,
        AllenRel::Equals => x1 == y1 && x2 == y2,
        AllenRel::Finishes => x1 > y1 && x2 == y2,
        AllenRel::After => x1 > y2,
    }
}

/// Relation between two event points; only `b`, `e` and `a` are defined.
pub fn point_relation(rel: AllenRel, p: u64, q: u64) -> Option<bool> {
    match rel {
        AllenRel::Before => Some(p < q),
        AllenRel::Equals => Some(p == q),
        AllenRel::After => Some(p > q),
        _ => None,
    }
}

/// Relation between an event point and an interval.
pub fn point_interval_relation(rel: AllenRel, p: u64, (y1, y2): (u64, u64)) -> Option<bool> {
    match rel {
        AllenRel::Before => Some(p < y1),
        AllenRel::Starts => Some(p == y1),
        AllenRel::During => Some(y1 < p && p < y2),
        AllenRel::Finishes => Some(p == y2),
        AllenRel::After => Some(p > y2),
        _ => None,
    }
}

/// Evaluates `x rel y` on single occurrences. `NE` if either is missing.
pub fn relation_holds(
    rel: AllenRel,
    x: (TemporalKind, Option<Occurrence>),
    y: (TemporalKind, Option<Occurrence>),
    now: u64,
) -> Result<TruthValue, TemporalError> {
    use TemporalKind::*;
    let ill = || TemporalError::IllTyped { rel, lhs: x.0, rhs: y.0 };
    if !rel.allowed(x.0, y.0) {
        return Err(ill());
    }
    let (Some(xo), Some(yo)) = (x.1, y.1) else { return Ok(TruthValue::NE) };
    let (xb, yb) = (xo.bounds(now), yo.bounds(now));
    let holds = match (x.0, y.0) {
        (Interval, Interval) => Some(interval_relation(rel, xb, yb)),
        (Event, Event) => point_relation(rel, xb.0, yb.0),
        (Event, Interval) => point_interval_relation(rel, xb.0, yb),
        (Interval, Event) => None,
    };
    holds.map(TruthValue::from_bool).ok_or_else(ill)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::parse_temporal;

    fn kb() -> CompiledKb {
        CompiledKb::from_source(
            "object x { t: number; o: boolean; c: boolean; }
             event E { origin: x.t > 90; }
             interval I { open: x.o; close: x.c; }
             rule r { then: x.o := true; }",
        )
        .unwrap()
    }

    /// Drives the interpretation with per-tick truth for (E, open, close).
    fn drive(steps: &[(bool, bool, bool)]) -> (Interpretation, Vec<TickInterpretation>) {
        let kb = kb();
        let mut it = Interpretation::new(&kb);
        let mut outs = Vec::new();
        for (tick, &(e, o, c)) in steps.iter().enumerate() {
            let out = it
                .interpret_tick(&kb, tick as u64, 0.5, |cx| {
                    let b = if std::ptr::eq(cx, &kb.temporal[0].start) {
                        e
                    } else if std::ptr::eq(cx, &kb.temporal[1].start) {
                        o
                    } else {
                        c
                    };
                    TruthValue::from_bool(b)
                })
                .unwrap();
            outs.push(out);
        }
        (it, outs)
    }

    #[test]
    fn rising_edge_origins() {
        let (it, outs) = drive(&[
            (false, false, false),
            (true, false, false),
            (true, false, false),
            (false, false, false),
            (true, false, false),
        ]);
        assert_eq!(it.lane("E").unwrap().count(), 2);
        assert_eq!(outs[1].origins.len(), 1);
        assert!(outs[2].origins.is_empty());
        assert_eq!(it.lane("E").unwrap().last().unwrap().start, 4);
    }

    #[test]
    fn close_before_open_is_an_anomaly() {
        let (it, outs) = drive(&[(false, false, false), (false, false, false), (false, false, true)]);
        assert_eq!(outs[2].anomalies[0].message, CLOSE_BEFORE_OPEN);
        assert_eq!(it.lane("I").unwrap().count(), 0);
    }

    #[test]
    fn simultaneous_edges_make_a_point_interval() {
        let (it, _) = drive(&[(false, true, true)]);
        assert_eq!(it.lane("I").unwrap().occurrences, vec![Occurrence { start: 0, end: Some(0) }]);
    }

    #[test]
    fn lengths() {
        let (it, _) = drive(&[(false, false, false), (false, true, false), (false, true, false), (false, true, false)]);
        let f = |s: &str| it.eval(&parse_temporal(s).unwrap(), 3);
        assert_eq!(f("I.l = 2"), TruthValue::TRUE);
        assert_eq!(f("I"), TruthValue::TRUE);
        let (it, _) = drive(&[(false, false, false)]);
        assert_eq!(it.eval(&parse_temporal("I.l > 0").unwrap(), 0), TruthValue::NE);
        assert_eq!(it.eval(&parse_temporal("E.c = 0").unwrap(), 0), TruthValue::TRUE);
        assert_eq!(it.eval(&parse_temporal("E b I").unwrap(), 0), TruthValue::NE);
    }

    #[test]
    fn relation_examples() {
        let iv = |a, b| (TemporalKind::Interval, Some(Occurrence { start: a, end: Some(b) }));
        let ev = |p| (TemporalKind::Event, Some(Occurrence { start: p, end: Some(p) }));
        assert_eq!(relation_holds(AllenRel::Before, iv(1, 3), iv(4, 6), 9), Ok(TruthValue::TRUE));
        assert_eq!(relation_holds(AllenRel::Overlaps, iv(1, 4), iv(2, 6), 9), Ok(TruthValue::TRUE));
        assert_eq!(relation_holds(AllenRel::During, ev(5), iv(3, 7), 9), Ok(TruthValue::TRUE));
        assert!(relation_holds(AllenRel::Meets, ev(5), ev(5), 9).is_err());
    }

    #[test]
    fn non_consecutive_tick() {
        let kb = kb();
        let mut it = Interpretation::new(&kb);
        assert!(it.interpret_tick(&kb, 1, 0.5, |_| TruthValue::FALSE).is_err());
    }
}
