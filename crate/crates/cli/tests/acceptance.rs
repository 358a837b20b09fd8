//! Acceptance suite. Each criterion prints one PASS or FAIL line; the
//! process exits nonzero if any criterion fails.

mod common;

use std::io::Cursor;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chronorule::commands::{self, ConsultArgs};
use chronorule_core::engine::{
    rank_question_candidates, Answer, EngineConfig, EngineState, RankTuple, TickRecord, Transcript,
};
use chronorule_core::kb::{parse_kb, parse_temporal, AllenRel, AttrRef, CompiledKb};
use chronorule_core::sim::{resolve_config, run_simulation, verify_replay, ReplayVerdict, Scenario};
use chronorule_core::temporal::{interval_relation, point_relation, CLOSE_BEFORE_OPEN};
use chronorule_core::testkit::{random_kb, random_scenario, GenLimits};
use chronorule_core::values::{
    alpha_levels, defuzzify, fuzzify, neg_arith, truth_combine, ArithOp, LogicOp, MembershipFunction, NegContext,
    Payload, TruthValue, Value,
};
use common::{demo, demo_source, http_consult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { name: "truth algebra", limit: secs(1), run: truth_algebra },
        Criterion { name: "allen semantics", limit: secs(1), run: allen_semantics },
        Criterion { name: "grammar gate", limit: None, run: grammar_gate },
        Criterion { name: "fuzzy kernel", limit: secs(5), run: fuzzy_kernel },
        Criterion { name: "inexact arithmetic", limit: secs(5), run: inexact_arithmetic },
        Criterion { name: "cache equivalence", limit: secs(60), run: cache_equivalence },
        Criterion { name: "conflict resolution", limit: None, run: conflict_resolution },
        Criterion { name: "rule activation", limit: None, run: rule_activation },
        Criterion { name: "event flow", limit: None, run: event_flow },
        Criterion { name: "backward chaining", limit: None, run: backward_chaining },
        Criterion { name: "end-to-end reactor", limit: secs(1), run: end_to_end_reactor },
        Criterion { name: "cli/service parity", limit: None, run: cli_service_parity },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS  {:<22} {detail} ({elapsed:.2?})", c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:<22} {why} ({elapsed:.2?})", c.name);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

// Truth algebra ----------------------------------------------------------

/// Reference strong-Kleene connectives over `Option<f64>`, `None` being NE.
fn kleene_and(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Some(0.0),
        (Some(x), Some(y)) => Some(x.min(y)),
        _ => None,
    }
}

fn kleene_or(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), _) | (_, Some(x)) if x == 1.0 => Some(1.0),
        (Some(x), Some(y)) => Some(x.max(y)),
        _ => None,
    }
}

fn tv(x: Option<f64>) -> TruthValue {
    x.map_or(TruthValue::NE, TruthValue::Known)
}

fn truth_algebra() -> Outcome {
    let and = |a, b| truth_combine(LogicOp::And, a, Some(b)).expect("binary");
    let or = |a, b| truth_combine(LogicOp::Or, a, Some(b)).expect("binary");
    let not = |a| truth_combine(LogicOp::Not, a, None).expect("unary");
    let mut checks = 0;
    // Boolean restriction: all 8 assignments of three operands, nested both ways.
    for bits in 0..8u8 {
        let [p, q, r] = [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
        let (a, b, c) = (TruthValue::from_bool(p), TruthValue::from_bool(q), TruthValue::from_bool(r));
        ensure!(and(and(a, b), c) == TruthValue::from_bool(p && q && r), "and on {p} {q} {r}");
        ensure!(or(or(a, b), c) == TruthValue::from_bool(p || q || r), "or on {p} {q} {r}");
        ensure!(not(and(a, b)) == TruthValue::from_bool(!(p && q)), "not-and on {p} {q}");
        ensure!(truth_combine(LogicOp::Not, a, Some(b)).is_err(), "not accepted two operands");
        checks += 4;
    }
    let grid: Vec<Option<f64>> = (0..=10).map(|i| Some(f64::from(i) / 10.0)).chain(std::iter::once(None)).collect();
    for &a in &grid {
        ensure!(not(tv(a)) == tv(a.map(|x| 1.0 - x)), "not {a:?}");
        for &b in &grid {
            let (x, y) = (tv(a), tv(b));
            ensure!(and(x, y) == tv(kleene_and(a, b)), "and {a:?} {b:?}");
            ensure!(or(x, y) == tv(kleene_or(a, b)), "or {a:?} {b:?}");
            ensure!(not(and(x, y)) == or(not(x), not(y)), "de Morgan (and) at {a:?} {b:?}");
            ensure!(not(or(x, y)) == and(not(x), not(y)), "de Morgan (or) at {a:?} {b:?}");
            checks += 4;
        }
    }
    Ok(format!("{checks} checks"))
}

// Allen semantics --------------------------------------------------------

fn allen_semantics() -> Outcome {
    use AllenRel::*;
    let direct = [Before, Meets, Overlaps, Starts, During, Finishes, Equals];
    let converse = [Before, Meets, Overlaps, Starts, During, Finishes];
    let mut pairs = 0;
    for x1 in 0..=6u64 {
        for x2 in x1 + 1..=6 {
            for y1 in 0..=6u64 {
                for y2 in y1 + 1..=6 {
                    let (x, y) = ((x1, x2), (y1, y2));
                    let held = direct.iter().filter(|&&r| interval_relation(r, x, y)).count()
                        + converse.iter().filter(|&&r| interval_relation(r, y, x)).count();
                    ensure!(held == 1, "{held} relations hold between {x:?} and {y:?}");
                    ensure!(interval_relation(After, x, y) == interval_relation(Before, y, x), "a is not converse b");
                    pairs += 1;
                }
            }
        }
    }
    for p in 0..=6u64 {
        for q in 0..=6u64 {
            let held = [Before, Equals, After].iter().filter(|&&r| point_relation(r, p, q) == Some(true)).count();
            ensure!(held == 1, "{held} point relations hold between {p} and {q}");
        }
    }
    Ok(format!("{pairs} interval pairs, 49 point pairs"))
}

// Grammar gate -----------------------------------------------------------

fn grammar_gate() -> Outcome {
    let decls = "object x { t: number; }
        event E { origin: x.t > 1; } event F { origin: x.t > 2; }
        interval I { open: x.t > 3; close: x.t < 3; } interval J { open: x.t > 4; close: x.t < 4; }";
    // interval-interval: every connective; point-point: b e a; point-interval: b s d f a.
    let expected: [(&str, &str, &str); 4] =
        [("I", "J", "bamosdef"), ("E", "F", "bea"), ("E", "I", "bsdfa"), ("I", "E", "")];
    let mut accepted = 0;
    for (x, y, allowed) in expected {
        for letter in ["b", "a", "m", "o", "s", "d", "e", "f"] {
            let src = format!("{decls}\nrule r {{ when: {x} {letter} {y}; then: x.t := 0; }}");
            let ok = parse_kb(&src).is_ok();
            ensure!(ok == allowed.contains(letter), "`{x} {letter} {y}` accepted={ok}");
            accepted += usize::from(ok);
        }
    }
    ensure!(accepted == 16, "{accepted} combinations accepted");
    Ok("16 accepted, 16 rejected".into())
}

// Fuzzy kernel -----------------------------------------------------------

fn fuzzy_kernel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ctx = NegContext::default();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = rng.gen_range(-1.0e3..1.0e3);
        let fz = fuzzify(&Value::number(x), &ctx).map_err(|e| e.to_string())?;
        let Payload::Fuzzy(mf) = &fz.value.payload else { return Err("fuzzify did not give a fuzzy value".into()) };
        let d = (defuzzify(mf).primary - x).abs();
        worst = worst.max(d);
        ensure!(d <= 1e-9, "round trip of {x} off by {d}");
    }
    for _ in 0..200 {
        let mut tri = || {
            let mut p = [rng.gen_range(-50..50), rng.gen_range(-50..50), rng.gen_range(-50..50)].map(f64::from);
            p.sort_by(f64::total_cmp);
            p[2] += 1.0;
            p
        };
        let (a, b) = (tri(), tri());
        let mk = |p: [f64; 3]| MembershipFunction::triangle(p[0], p[1], p[2]).map(Value::fuzzy);
        let (va, vb) = (mk(a).map_err(|e| e.to_string())?, mk(b).map_err(|e| e.to_string())?);
        let s = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
        // Dyadic levels (steps of 1/8) keep every operation exact, so the
        // closed form must match bit for bit; decimal levels round.
        for (levels, tol) in [(9, 0.0), (ctx.alpha_levels, 1e-12)] {
            let ctx = NegContext { alpha_levels: levels, ..ctx };
            let sum = neg_arith(ArithOp::Add, &va, &vb, &ctx).map_err(|e| e.to_string())?;
            let Payload::Fuzzy(mf) = &sum.payload else { return Err("sum of fuzzy values not fuzzy".into()) };
            for alpha in alpha_levels(levels, 1.0) {
                let expected = (s[0] + alpha * (s[1] - s[0]), s[2] - alpha * (s[2] - s[1]));
                let got = mf.alpha_cut(alpha).ok_or("empty alpha cut")?;
                let close = (got.0 - expected.0).abs() <= tol && (got.1 - expected.1).abs() <= tol;
                ensure!(close, "{a:?}+{b:?} at alpha {alpha} of {levels}: {got:?} != {expected:?}");
            }
        }
    }
    let bimodal = MembershipFunction::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (5.0, 0.0), (6.0, 1.0), (7.0, 0.0)])
        .map_err(|e| e.to_string())?;
    let d = defuzzify(&bimodal);
    ensure!(d.values.len() == 2, "bimodal gave {:?}", d.values);
    ensure!((d.values[0] - 1.0).abs() < 1e-12 && (d.values[1] - 6.0).abs() < 1e-12, "centroids {:?}", d.values);
    Ok(format!("worst round trip {worst:.1e}, 200 triangle sums exact on dyadic levels"))
}

// Inexact arithmetic -----------------------------------------------------

/// Endpoint oracle: hull of the four corner results.
fn corner_oracle(op: ArithOp, a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
    let f = |x: f64, y: f64| match op {
        ArithOp::Add => x + y,
        ArithOp::Sub => x - y,
        ArithOp::Mul => x * y,
        ArithOp::Div => x / y,
    };
    if op == ArithOp::Div && b.0 <= 0.0 && b.1 >= 0.0 {
        return None;
    }
    let c = [f(a.0, b.0), f(a.0, b.1), f(a.1, b.0), f(a.1, b.1)];
    Some((c.iter().copied().fold(f64::INFINITY, f64::min), c.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
}

fn inexact_arithmetic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let ctx = NegContext::default();
    let ops = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div];
    let mut zero_spanning = 0;
    for i in 0..10_000 {
        let mut operand = |crisp: bool| -> (Value, (f64, f64)) {
            let c: f64 = rng.gen_range(-20.0..20.0);
            if crisp {
                return (Value::number(c), (c, c));
            }
            let h: f64 = rng.gen_range(0.01..5.0);
            (Value::inexact(c, h).expect("finite"), (c - h, c + h))
        };
        let (va, ia) = operand(false);
        let (vb, ib) = operand(i % 5 == 0);
        let op = ops[i % 4];
        match (corner_oracle(op, ia, ib), neg_arith(op, &va, &vb, &ctx)) {
            (None, Err(_)) => zero_spanning += 1,
            (None, Ok(v)) => return Err(format!("{va} / {vb} gave {v}, expected an error")),
            (Some(_), Err(e)) => return Err(format!("{va} {op} {vb} failed: {e}")),
            (Some((lo, hi)), Ok(v)) => {
                let Payload::Inexact { center, half_width } = v.payload else {
                    return Err(format!("{va} {op} {vb} gave {v}"));
                };
                ensure!(
                    center == (lo + hi) / 2.0 && half_width == (hi - lo) / 2.0,
                    "{va} {op} {vb}: [{}, {}] != [{lo}, {hi}]",
                    center - half_width,
                    center + half_width
                );
            }
        }
    }
    for _ in 0..1000 {
        let c: f64 = rng.gen_range(-1.0..1.0);
        let divisor = Value::inexact(c, c.abs() + rng.gen_range(0.0..1.0)).expect("finite");
        ensure!(
            neg_arith(ArithOp::Div, &Value::inexact(3.0, 1.0).unwrap(), &divisor, &ctx).is_err(),
            "division by {divisor} succeeded"
        );
    }
    ensure!(neg_arith(ArithOp::Div, &Value::number(1.0), &Value::number(0.0), &ctx).is_err(), "1 / 0 succeeded");
    Ok(format!("10000 cases, {zero_spanning} random zero-spanning divisors, 1000 forced"))
}

// Cache equivalence ------------------------------------------------------

fn cache_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ticks_compared = 0;
    for i in 0..100 {
        let g = random_kb(&mut rng, GenLimits::default());
        let kb = Arc::new(CompiledKb::from_source(&g.source).map_err(|e| format!("kb {i}: {e:?}"))?);
        let scenario = random_scenario(&mut rng, &g, 20);
        let run = |use_cache: bool| {
            let config = EngineConfig { use_cache, parallel: false, ..EngineConfig::default() };
            run_simulation(kb.clone(), &scenario, 20, config)
                .map(|t| {
                    t.records.iter().map(|r| serde_json::to_string(r).expect("records serialize")).collect::<Vec<_>>()
                })
                .map_err(|e| e.to_string())
        };
        let (on, off) = (run(true)?, run(false)?);
        ensure!(on == off, "kb {i} differs with the cache on\n{}", g.source);
        ticks_compared += on.len();
    }
    Ok(format!("100 KBs, {ticks_compared} records identical"))
}

// Conflict resolution ----------------------------------------------------

fn conflict_resolution() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let tuple = |rng: &mut ChaCha8Rng| RankTuple {
        specificity: rng.gen_range(0..4),
        novelty: rng.gen_bool(0.8).then(|| rng.gen_range(0..4)),
        reliability: f64::from(rng.gen_range(0..5u8)) / 4.0,
        index: rng.gen_range(0..4),
    };
    // Preferred first: more atoms, newer facts, higher reliability, earlier rule.
    let key = |t: &RankTuple| {
        (
            std::cmp::Reverse(t.specificity),
            std::cmp::Reverse(t.novelty.map_or(-1, |n| n as i64)),
            std::cmp::Reverse((t.reliability * 4.0) as i64),
            t.index,
        )
    };
    for _ in 0..10_000 {
        let (x, y, z) = (tuple(&mut rng), tuple(&mut rng), tuple(&mut rng));
        ensure!(x.cmp(&y) == key(&x).cmp(&key(&y)), "{x:?} vs {y:?}");
        ensure!(x.cmp(&y) == y.cmp(&x).reverse(), "asymmetry at {x:?} {y:?}");
        ensure!((x.cmp(&y).is_eq()) == (x == y), "equality at {x:?} {y:?}");
        if x <= y && y <= z {
            ensure!(x <= z, "transitivity at {x:?} {y:?} {z:?}");
        }
    }

    let kb = "object o { a: number; b: number; c: number; x: number; y: number; z: number; }
        rule old { kind: periodic 2; if: o.a > 0; then: o.x := 1; }
        rule fresh { if: o.b > 0; then: o.y := 1; }
        rule wide { cf: 0.5; if: o.a > 0 & o.c > 0; then: o.z := 1; }";
    let scenario = Scenario::parse(
        r#"{"tick":0,"set":{"o.a":1,"o.b":{"inexact":[0.5,1]},"o.c":1}}
{"tick":2,"set":{"o.b":2}}
{"tick":4,"set":{"o.a":2,"o.b":3}}"#,
    )
    .map_err(|e| e.to_string())?;
    let records = simulate(kb, &scenario, 5)?;
    let order = |t: usize| records[t].fired.iter().map(|f| f.rule.as_str()).collect::<Vec<_>>();
    // tick 0: specificity, then reliability (b > 0 has truth 0.75)
    ensure!(order(0) == ["wide", "old", "fresh"], "tick 0 fired {:?}", order(0));
    // tick 2: the freshly asserted b outranks the periodic match on old facts
    ensure!(order(2) == ["fresh", "old"], "tick 2 fired {:?}", order(2));
    // tick 4: everything ties but declaration order
    ensure!(order(4) == ["wide", "old", "fresh"], "tick 4 fired {:?}", order(4));
    ensure!(records[4].fired[1].rank.reliability == records[4].fired[2].rank.reliability, "tick 4 reliability differs");
    Ok("10000 tuples, 3-rule cascade".into())
}

fn simulate(kb: &str, scenario: &Scenario, ticks: u64) -> Result<Vec<TickRecord>, String> {
    let kb = Arc::new(CompiledKb::from_source(kb).map_err(|e| format!("{e:?}"))?);
    let config = resolve_config(&kb, None)?;
    Ok(run_simulation(kb, scenario, ticks, config).map_err(|e| e.to_string())?.records)
}

fn scenario_from(lines: impl Iterator<Item = Json>) -> Result<Scenario, String> {
    let text: Vec<String> = lines.map(|l| l.to_string()).collect();
    Scenario::parse(&text.join("\n")).map_err(|e| e.to_string())
}

// Rule activation --------------------------------------------------------

fn rule_activation() -> Outcome {
    let kb = "object o { x: number; n: number; m: number; k: number; }
        event Up { origin: o.x > 5; }
        rule every3 { kind: periodic 3; then: o.n := 1; }
        rule every7 { kind: periodic 7; if: o.x > 0; then: o.m := 1; }
        rule on_up { kind: response Up; then: o.k := 1; }";
    let x = |t: u64| t % 10;
    let scenario = scenario_from((0..100).map(|t| json!({ "tick": t, "set": { "o.x": x(t) } })))?;
    let records = simulate(kb, &scenario, 100)?;
    let mut above = false;
    for (t, rec) in (0u64..).zip(&records) {
        let rising = x(t) > 5 && !above;
        above = x(t) > 5;
        let mut expected = Vec::new();
        if t % 3 == 0 {
            expected.push("every3");
        }
        if t % 7 == 0 && x(t) > 0 {
            expected.push("every7");
        }
        if rising {
            expected.push("on_up");
        }
        let mut fired: Vec<&str> = rec.fired.iter().map(|f| f.rule.as_str()).collect();
        fired.sort_unstable();
        ensure!(fired == expected, "tick {t}: fired {fired:?}, schedule says {expected:?}");
    }
    let total: usize = records.iter().map(|r| r.fired.len()).sum();
    Ok(format!("{total} firings over 100 ticks"))
}

// Event flow -------------------------------------------------------------

fn event_flow() -> Outcome {
    let kb_src = "object s { v: number; w: number; }
        event Spike { origin: s.v > 5; }
        interval Run { open: s.w > 0; close: s.w < 0; }
        interval Never { open: s.v > 100; close: s.v < -100; }";
    let scenario = Scenario::parse(
        r#"{"tick":0,"set":{"s.v":0,"s.w":0}}
{"tick":1,"set":{"s.v":7}}
{"tick":2,"set":{"s.v":8}}
{"tick":3,"set":{"s.v":1}}
{"tick":4,"set":{"s.v":9}}
{"tick":5,"set":{"s.w":1}}
{"tick":8,"set":{"s.w":-1}}
{"tick":9,"set":{"s.v":-200}}"#,
    )
    .map_err(|e| e.to_string())?;
    let kb = Arc::new(CompiledKb::from_source(kb_src).map_err(|e| format!("{e:?}"))?);
    let mut engine = EngineState::new(kb.clone(), EngineConfig::default()).map_err(|e| e.to_string())?;
    // (tick, formula) pairs that must hold after that tick, from a hand trace.
    let expect: &[(u64, &str, Option<bool>)] = &[
        (0, "Spike.c = 0", Some(true)),
        (0, "Run.l > 0", None),
        (1, "Spike.c = 1", Some(true)),
        (2, "Spike.c = 1", Some(true)),
        (4, "Spike.c = 2", Some(true)),
        (5, "Run.l = 0", Some(true)),
        (7, "Run.l = 2", Some(true)),
        (7, "Spike b Run", Some(true)),
        (8, "Run.l = 3", Some(true)),
        (10, "Run.l = 3", Some(true)),
        (10, "Never.l > 0", None),
        (10, "Never.c = 0", Some(true)),
    ];
    let mut records = Vec::new();
    for t in 0..=10 {
        let rec = engine.run_cycle(scenario.assertions_at(t)).map_err(|e| e.to_string())?;
        for &(at, formula, want) in expect.iter().filter(|e| e.0 == t) {
            let f = parse_temporal(formula).map_err(|e| e.to_string())?;
            let got = engine.interpretation().eval(&f, at);
            ensure!(got == want.map_or(TruthValue::NE, TruthValue::from_bool), "tick {at}: `{formula}` is {got}");
        }
        records.push(rec);
    }
    let origin_ticks: Vec<u64> = records.iter().filter(|r| !r.origins.is_empty()).map(|r| r.tick).collect();
    ensure!(origin_ticks == [1, 4, 5, 8], "origins at {origin_ticks:?}");
    let anomalies: Vec<(u64, &str)> =
        records.iter().flat_map(|r| r.anomalies.iter().map(|a| (a.tick, a.name.as_str()))).collect();
    ensure!(anomalies == [(9, "Never")], "anomalies {anomalies:?}");
    ensure!(records[9].anomalies[0].message == CLOSE_BEFORE_OPEN, "anomaly text {:?}", records[9].anomalies[0]);

    let trace = run_simulation(kb.clone(), &scenario, 11, EngineConfig::default()).map_err(|e| e.to_string())?;
    ensure!(
        matches!(verify_replay(&trace.to_jsonl(), kb, &scenario), Ok(ReplayVerdict::Pass)),
        "event-flow replay diverged"
    );
    let reactor = reactor_trace()?;
    ensure!(
        matches!(verify_replay(&reactor.2.to_jsonl(), reactor.0, &reactor.1), Ok(ReplayVerdict::Pass)),
        "reactor replay diverged"
    );
    Ok("12 hand-traced formulas, 1 anomaly, 2 replays".into())
}

// Backward chaining ------------------------------------------------------

fn consult_core(kb: &Arc<CompiledKb>, answers: &[(&str, Answer)]) -> Result<Transcript, String> {
    let config = resolve_config(kb, None)?;
    chronorule_core::engine::backward_chain(kb.clone(), config, &AttrRef::new("dx", "disease"), |q| {
        let name = q.attr.to_string();
        answers.iter().find(|(n, _)| *n == name).map_or(Answer::Unknown, |(_, a)| a.clone())
    })
    .map_err(|e| e.to_string())
}

fn backward_chaining() -> Outcome {
    let kb = Arc::new(CompiledKb::from_source(&demo_source("diagnosis.krl")).map_err(|e| format!("{e:?}"))?);
    let b = |x| Answer::Value(Value::boolean(x));
    let scripts: Vec<Vec<(&str, Answer)>> = vec![
        vec![
            ("patient.fever", b(true)),
            ("patient.cough", b(false)),
            ("patient.severity", Answer::Value(Value::number(3.0))),
            ("patient.rash", b(true)),
        ],
        vec![("patient.fever", b(false)), ("patient.cough", b(false)), ("patient.itch", b(true))],
        vec![("patient.fever", b(true)), ("patient.cough", b(true)), ("patient.aches", b(true))],
        vec![],
    ];
    let mut ask_points = 0;
    let mut logs = Vec::new();
    for script in &scripts {
        let t = consult_core(&kb, script)?;
        for rec in &t.log {
            let ids: Vec<_> = rec.candidates.iter().map(|r| kb.attr_id(r).expect("declared")).collect();
            let ranked = rank_question_candidates(&ids, &kb);
            ensure!(ranked == ids, "candidates {:?} are not in ranked order", rec.candidates);
            ensure!(
                kb.attr_id(&rec.question.attr) == ranked.first().copied(),
                "asked {} out of order",
                rec.question.attr
            );
            ask_points += 1;
        }
        logs.push(t.log.iter().map(|r| r.question.attr.to_string()).collect::<Vec<_>>());
    }
    ensure!(logs.iter().all(|l| l[0] == "patient.fever"), "the mutex parameter is not asked first: {logs:?}");
    ensure!(logs[0] == ["patient.fever", "patient.cough", "patient.severity", "patient.rash"], "{:?}", logs[0]);
    // fever = true prunes `~fever & itch`; fever = false prunes every fever rule.
    ensure!(!logs[0].iter().chain(&logs[2]).any(|a| a == "patient.itch"), "itch asked after fever = true");
    ensure!(
        !logs[1].iter().any(|a| ["patient.aches", "patient.rash", "patient.severity"].contains(&a.as_str())),
        "fever-rule parameters asked after fever = false: {:?}",
        logs[1]
    );
    Ok(format!("{ask_points} ask points match the ranking"))
}

// End to end -------------------------------------------------------------

fn reactor_trace() -> Result<(Arc<CompiledKb>, Scenario, chronorule_core::sim::Trace), String> {
    let kb = Arc::new(CompiledKb::from_source(&demo_source("reactor.krl")).map_err(|e| format!("{e:?}"))?);
    let text = std::fs::read_to_string(demo("reactor.scn.jsonl")).map_err(|e| e.to_string())?;
    let scenario = Scenario::parse(&text).map_err(|e| e.to_string())?;
    let config = resolve_config(&kb, None)?;
    let trace = run_simulation(kb.clone(), &scenario, 50, config).map_err(|e| e.to_string())?;
    Ok((kb, scenario, trace))
}

/// Hand step-through of the alarm path, independent of the engine.
fn reactor_oracle(scenario_text: &str) -> Option<(u64, f64)> {
    let tri = |x: f64, a: f64, b: f64, c: f64| {
        if x <= a || x >= c {
            0.0
        } else if x <= b {
            (x - a) / (b - a)
        } else {
            (c - x) / (c - b)
        }
    };
    let normal = |x: f64| {
        if x <= 60.0 {
            1.0
        } else if x >= 80.0 {
            0.0
        } else {
            (80.0 - x) / 20.0
        }
    };
    let critical = |x: f64| {
        if x >= 120.0 {
            1.0
        } else if x <= 100.0 {
            0.0
        } else {
            (x - 100.0) / 20.0
        }
    };
    let (mut temp, mut pressure, mut coolant) = (f64::NAN, f64::NAN, f64::NAN);
    let mut status = "";
    let (mut overheat_at, mut hot_before) = (None, false);
    let (mut low_open_at, mut low_before) = (None::<u64>, false);
    for line in scenario_text.lines() {
        let entry: Json = serde_json::from_str(line).ok()?;
        let t = entry["tick"].as_u64()?;
        let set = &entry["set"];
        let changed = set.get("reactor.temp").is_some() || set.get("reactor.pressure").is_some();
        if let Some(v) = set["reactor.temp"].as_f64() {
            temp = v;
        }
        if let Some(v) = set["reactor.pressure"].as_f64() {
            pressure = v;
        }
        if let Some(v) = set["reactor.coolant"].as_f64() {
            coolant = v;
        }
        let hot = temp > 100.0;
        if hot && !hot_before && overheat_at.is_none() {
            overheat_at = Some(t);
        }
        hot_before = hot;
        let low = coolant < 30.0;
        if low && !low_before && low_open_at.is_none() {
            low_open_at = Some(t);
        }
        low_before = low;
        if changed {
            if normal(temp) >= 0.5 {
                status = "ok";
            }
            if tri(temp, 70.0, 90.0, 110.0) >= 0.5 {
                status = "warning";
            }
            let danger = critical(temp).max(if pressure > 9.0 { 1.0 } else { 0.0 });
            if danger >= 0.5 {
                status = "danger";
            }
        }
        let temporal = matches!((overheat_at, low_open_at), (Some(e), Some(o)) if e < o && t - o > 2);
        let truth = critical(temp).min(if pressure > 7.0 { 1.0 } else { 0.0 });
        if status == "danger" && temporal && truth >= 0.5 {
            return Some((t, 0.9 * truth * 0.8));
        }
    }
    None
}

fn end_to_end_reactor() -> Outcome {
    let (kb, _, trace) = reactor_trace()?;
    ensure!(kb.kb.rules.len() >= 8, "{} rules", kb.kb.rules.len());
    let text = std::fs::read_to_string(demo("reactor.scn.jsonl")).map_err(|e| e.to_string())?;
    let (tick, certainty) = reactor_oracle(&text).ok_or("hand simulation never raises the alarm")?;
    let alarm = trace.records.iter().find_map(|r| {
        r.control_actions
            .iter()
            .find(|a| a.attr.to_string() == "ctl.alarm" && a.value.payload == Payload::Bool(true))
            .map(|a| (r.tick, a.value.certainty))
    });
    let (got_tick, got_cf) = alarm.ok_or("the engine never raised the alarm")?;
    ensure!(got_tick == tick, "alarm at tick {got_tick}, hand simulation says {tick}");
    ensure!((got_cf - certainty).abs() < 1e-12, "alarm certainty {got_cf}, expected {certainty}");
    Ok(format!("alarm at tick {tick} with certainty {certainty:.3}"))
}

// CLI/service parity -----------------------------------------------------

fn cli_service_parity() -> Outcome {
    let scripts: [&[&str]; 4] = [
        &["true", "false", "3", "true"],
        &["false", "true"],
        &["true", "unknown", "9"],
        &["unknown", "unknown", "unknown", "unknown", "unknown", "unknown"],
    ];
    let rt = tokio::runtime::Builder::new_current_thread().build().map_err(|e| e.to_string())?;
    let app = chronorule::service::router(None);
    let source = demo_source("diagnosis.krl");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (i, script) in scripts.iter().enumerate() {
        let path = dir.path().join(format!("t{i}.json"));
        let kb = demo("diagnosis.krl");
        let args = ConsultArgs { kb: &kb, goal: "dx.disease", config: None, transcript: Some(&path) };
        let input = script.join("\n") + "\n";
        let code = commands::consult(&args, &mut Cursor::new(input.into_bytes()), &mut Vec::new(), &mut Vec::new());
        ensure!(code == 0, "consult exited {code}");
        let cli: Json = serde_json::from_str(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let answers: Vec<Json> = script.iter().map(|s| serde_json::from_str(s).unwrap_or_else(|_| json!(s))).collect();
        let (log, outcome) = rt.block_on(http_consult(&app, &source, "dx.disease", &answers));
        ensure!(cli["log"] == log, "script {i}: logs differ\ncli: {}\nhttp: {log}", cli["log"]);
        ensure!(cli["outcome"] == outcome, "script {i}: outcomes differ: {} vs {outcome}", cli["outcome"]);
    }
    Ok(format!("{} scripts identical", scripts.len()))
}
