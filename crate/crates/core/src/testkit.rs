//! Random, well-typed knowledge bases and scenarios for property tests
//! and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::kb::{AllenRel, AttrRef, TemporalKind};
use crate::sim::{Scenario, ScenarioEntry};
use crate::values::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrKind {
    /// `Level`: number in [0, 10] with terms `low` and `high`.
    Level,
    Number,
    Boolean,
    /// `Mode`: symbol in {idle, run, stop}.
    Mode,
}

#[derive(Debug, Clone)]
pub struct GenKb {
    pub source: String,
    pub attrs: Vec<(AttrRef, AttrKind)>,
}

#[derive(Debug, Clone, Copy)]
pub struct GenLimits {
    pub max_rules: usize,
    pub max_attrs: usize,
    pub max_temporal: usize,
}

impl Default for GenLimits {
    fn default() -> Self {
        Self { max_rules: 10, max_attrs: 6, max_temporal: 3 }
    }
}

const MODES: [&str; 3] = ["idle", "run", "stop"];

fn pick<'a, T, R: Rng>(rng: &mut R, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("non-empty")
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    attrs: Vec<(AttrRef, AttrKind)>,
    temporal: Vec<(String, TemporalKind)>,
}

impl<R: Rng> Gen<'_, R> {
    fn attr_of(&mut self, kinds: &[AttrKind]) -> Option<AttrRef> {
        let xs: Vec<&AttrRef> = self.attrs.iter().filter(|(_, k)| kinds.contains(k)).map(|(a, _)| a).collect();
        xs.choose(self.rng).map(|a| (*a).clone())
    }

    fn atom(&mut self) -> String {
        let (attr, kind) = pick(self.rng, &self.attrs).clone();
        let op = *pick(self.rng, &[">", "<", "=", ">=", "<=", "!="]);
        match kind {
            AttrKind::Boolean => format!("{attr}"),
            AttrKind::Mode => format!("{attr} {} {}", pick(self.rng, &["=", "!="]), pick(self.rng, &MODES)),
            AttrKind::Level if self.rng.gen_bool(0.3) => {
                format!("{attr} {} {}", pick(self.rng, &["=", ">", "<"]), pick(self.rng, &["low", "high"]))
            }
            _ => match self.rng.gen_range(0..4) {
                0 => match self.attr_of(&[AttrKind::Level, AttrKind::Number]) {
                    Some(other) => format!("{attr} + {other} {op} {}", self.rng.gen_range(0..20)),
                    None => format!("{attr} {op} {}", self.rng.gen_range(0..10)),
                },
                1 => format!("{attr} {op} {} +- {}", self.rng.gen_range(0..10), self.rng.gen_range(0..3)),
                _ => format!("{attr} {op} {}", self.rng.gen_range(0..10)),
            },
        }
    }

    fn expr(&mut self, depth: usize) -> String {
        if depth == 0 || self.rng.gen_bool(0.35) {
            return self.atom();
        }
        match self.rng.gen_range(0..5) {
            0 => format!("~({})", self.expr(depth - 1)),
            1 | 2 => format!("({} v {})", self.expr(depth - 1), self.expr(depth - 1)),
            _ => format!("{} & {}", self.expr(depth - 1), self.expr(depth - 1)),
        }
    }

    fn temporal_atom(&mut self) -> String {
        let (x, xk) = pick(self.rng, &self.temporal).clone();
        if self.rng.gen_bool(0.4) {
            let attr = if xk == TemporalKind::Interval && self.rng.gen_bool(0.5) { "l" } else { "c" };
            return format!("{x}.{attr} {} {}", pick(self.rng, &[">", "<", "="]), self.rng.gen_range(0..4));
        }
        let (y, yk) = pick(self.rng, &self.temporal).clone();
        let allowed: Vec<AllenRel> = AllenRel::ALL.into_iter().filter(|r| r.allowed(xk, yk)).collect();
        match allowed.choose(self.rng) {
            Some(r) => format!("{x} {} {y}", r.letter()),
            None => format!("{x}.c > 0"),
        }
    }

    fn temporal(&mut self, depth: usize) -> String {
        if depth == 0 || self.rng.gen_bool(0.5) {
            return self.temporal_atom();
        }
        match self.rng.gen_range(0..3) {
            0 => format!("~({})", self.temporal(depth - 1)),
            1 => format!("({} v {})", self.temporal(depth - 1), self.temporal(depth - 1)),
            _ => format!("{} & {}", self.temporal(depth - 1), self.temporal(depth - 1)),
        }
    }

    fn action(&mut self) -> String {
        let (attr, kind) = pick(self.rng, &self.attrs).clone();
        let value = match kind {
            AttrKind::Boolean => pick(self.rng, &["true", "false"]).to_string(),
            AttrKind::Mode => pick(self.rng, &MODES).to_string(),
            AttrKind::Level | AttrKind::Number => match self.rng.gen_range(0..5) {
                0 => match self.attr_of(&[AttrKind::Level, AttrKind::Number]) {
                    Some(other) => format!("{other} + {}", self.rng.gen_range(0..3)),
                    None => self.rng.gen_range(0..10).to_string(),
                },
                1 => {
                    let c = self.rng.gen_range(1..9);
                    format!("tri({}, {c}, {})", c - 1, c + 1)
                }
                2 => format!("{} +- 1", self.rng.gen_range(0..10)),
                3 if kind == AttrKind::Level => pick(self.rng, &["low", "high"]).to_string(),
                _ => self.rng.gen_range(0..10).to_string(),
            },
        };
        if self.rng.gen_bool(0.3) {
            format!("{attr} := {value} cf {}", self.rng.gen_range(5..=10) as f64 / 10.0)
        } else {
            format!("{attr} := {value}")
        }
    }
}

/// A random valid knowledge base within `limits`.
pub fn random_kb<R: Rng>(rng: &mut R, limits: GenLimits) -> GenKb {
    let n_attrs = rng.gen_range(2..=limits.max_attrs.max(2));
    let kinds = [AttrKind::Level, AttrKind::Number, AttrKind::Boolean, AttrKind::Mode];
    let attrs: Vec<(AttrRef, AttrKind)> =
        (0..n_attrs).map(|i| (AttrRef::new("o", format!("a{i}")), *pick(rng, &kinds))).collect();
    let mut src = String::from(
        "type Level { kind: number; range: [0, 10]; term low: tri(-5, 0, 5); term high: tri(5, 10, 15); }\n\
         type Mode { values: {idle, run, stop}; }\nobject o {\n",
    );
    for (a, k) in &attrs {
        let ty = match k {
            AttrKind::Level => "Level",
            AttrKind::Number => "number",
            AttrKind::Boolean => "boolean",
            AttrKind::Mode => "Mode",
        };
        src.push_str(&format!("  {}: {ty};\n", a.attr));
    }
    src.push_str("}\n");
    let mut g = Gen { rng, attrs, temporal: vec![] };
    let n_temporal = g.rng.gen_range(0..=limits.max_temporal);
    for i in 0..n_temporal {
        if g.rng.gen_bool(0.5) {
            let name = format!("E{i}");
            src.push_str(&format!("event {name} {{ origin: {}; }}\n", g.expr(1)));
            g.temporal.push((name, TemporalKind::Event));
        } else {
            let name = format!("I{i}");
            src.push_str(&format!("interval {name} {{ open: {}; close: {}; }}\n", g.expr(1), g.expr(1)));
            g.temporal.push((name, TemporalKind::Interval));
        }
    }
    let n_rules = g.rng.gen_range(1..=limits.max_rules.max(1));
    for i in 0..n_rules {
        src.push_str(&format!("rule r{i} {{ "));
        let events: Vec<String> =
            g.temporal.iter().filter(|(_, k)| *k == TemporalKind::Event).map(|(n, _)| n.clone()).collect();
        match g.rng.gen_range(0..6) {
            0 => src.push_str(&format!("kind: periodic {}; ", g.rng.gen_range(1..5))),
            1 if !events.is_empty() => src.push_str(&format!("kind: response {}; ", pick(g.rng, &events))),
            _ => {}
        }
        if g.rng.gen_bool(0.3) {
            src.push_str(&format!("cf: {}; ", g.rng.gen_range(5..=10) as f64 / 10.0));
        }
        if g.rng.gen_bool(0.85) {
            src.push_str(&format!("if: {}; ", g.expr(3)));
        }
        if !g.temporal.is_empty() && g.rng.gen_bool(0.4) {
            src.push_str(&format!("when: {}; ", g.temporal(2)));
        }
        let n_actions = g.rng.gen_range(1..=2);
        let mut actions: Vec<String> = Vec::new();
        while actions.len() < n_actions {
            let a = g.action();
            let target = a.split(" := ").next().unwrap_or_default().to_string();
            if actions.iter().all(|x| !x.starts_with(&format!("{target} :="))) {
                actions.push(a);
            } else {
                break;
            }
        }
        src.push_str(&format!("then: {}; }}\n", actions.join(", ")));
    }
    GenKb { source: src, attrs: g.attrs }
}

/// A random literal that fits `kind`.
pub fn random_value<R: Rng>(rng: &mut R, kind: AttrKind) -> Value {
    match kind {
        AttrKind::Boolean => Value::boolean(rng.gen_bool(0.5)),
        AttrKind::Mode => Value::term(*pick(rng, &MODES)),
        AttrKind::Level if rng.gen_bool(0.2) => Value::term(*pick(rng, &["low", "high"])),
        AttrKind::Level | AttrKind::Number => {
            let x = rng.gen_range(0..=10) as f64;
            match rng.gen_range(0..4) {
                0 => Value::inexact(x, rng.gen_range(0..=2) as f64).expect("finite"),
                1 => Value::number(x).with_certainty(rng.gen_range(5..=10) as f64 / 10.0).expect("in range"),
                _ => Value::number(x),
            }
        }
    }
}

/// A scenario asserting a random subset of attributes at each tick.
pub fn random_scenario<R: Rng>(rng: &mut R, kb: &GenKb, ticks: u64) -> Scenario {
    let entries = (0..ticks)
        .map(|tick| {
            let mut set: Vec<(AttrRef, Value)> = Vec::new();
            for (a, k) in &kb.attrs {
                if rng.gen_bool(0.4) {
                    set.push((a.clone(), random_value(rng, *k)));
                }
            }
            set.sort_by(|a, b| a.0.cmp(&b.0));
            ScenarioEntry { tick, set }
        })
        .collect();
    Scenario { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::CompiledKb;
    use rand::SeedableRng;

    #[test]
    fn generated_kbs_validate() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let g = random_kb(&mut rng, GenLimits::default());
            if let Err(e) = CompiledKb::from_source(&g.source) {
                panic!("{e:?}\n{}", g.source);
            }
        }
    }
}
