//! Subcommand implementations. Each takes its streams explicitly and
//! returns the process exit code.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use chronorule_core::engine::{Answer, Consultation, EngineConfig, Step, Transcript};
use chronorule_core::kb::{AttrRef, CompiledKb, KbError};
use chronorule_core::sim::{self, ReplayVerdict};
use chronorule_core::values::Value;

/// Failed reads of one answer before it counts as `unknown`.
pub const MAX_ANSWER_ATTEMPTS: usize = 4;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_MISSING: i32 = 2;

/// Loads and validates a KB, reporting problems one per line.
fn load_kb(path: &Path, err: &mut dyn Write) -> Result<Arc<CompiledKb>, i32> {
    let src = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", path.display());
            return Err(EXIT_MISSING);
        }
    };
    match CompiledKb::from_source(&src) {
        Ok(kb) => Ok(Arc::new(kb)),
        Err(KbError::Syntax(e)) => {
            let _ = writeln!(err, "{}:{e}", path.display());
            Err(EXIT_INVALID)
        }
        Err(KbError::Invalid(diags)) => {
            for d in diags {
                let _ = writeln!(err, "{}:{d}", path.display());
            }
            Err(EXIT_INVALID)
        }
    }
}

fn load_config(kb: &CompiledKb, sidecar: Option<&Path>, err: &mut dyn Write) -> Result<EngineConfig, i32> {
    let json = match sidecar {
        None => None,
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                let _ = writeln!(err, "{}: {e}", p.display());
                EXIT_MISSING
            })?;
            Some(serde_json::from_str(&text).map_err(|e| {
                let _ = writeln!(err, "{}: {e}", p.display());
                EXIT_INVALID
            })?)
        }
    };
    sim::resolve_config(kb, json.as_ref()).map_err(|e| {
        let _ = writeln!(err, "config: {e}");
        EXIT_INVALID
    })
}

pub fn check(path: &Path, err: &mut dyn Write) -> i32 {
    match load_kb(path, err) {
        Ok(_) => EXIT_OK,
        Err(code) => code,
    }
}

pub struct RunArgs<'a> {
    pub kb: &'a Path,
    pub scenario: &'a Path,
    pub ticks: u64,
    pub trace: &'a Path,
    pub config: Option<&'a Path>,
}

pub fn run(args: &RunArgs<'_>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let kb = match load_kb(args.kb, err) {
        Ok(kb) => kb,
        Err(code) => return code,
    };
    let config = match load_config(&kb, args.config, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let scenario = match sim::load_scenario(args.scenario) {
        Ok(s) => s,
        Err(sim::SimError::Io(e)) => {
            let _ = writeln!(err, "{}: {e}", args.scenario.display());
            return EXIT_MISSING;
        }
        Err(e) => {
            let _ = writeln!(err, "{}:{e}", args.scenario.display());
            return EXIT_INVALID;
        }
    };
    let file = match fs::File::create(args.trace) {
        Ok(f) => std::io::BufWriter::new(f),
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", args.trace.display());
            return EXIT_INVALID;
        }
    };
    let result = sim::run_simulation_to(kb, &scenario, args.ticks, config, file, |r| {
        let origins = r.origins.iter().filter(|o| o.kind != chronorule_core::temporal::OriginKind::Close).count();
        let _ = writeln!(out, "tick {}: fired {}, origins {}", r.tick, r.fired.len(), origins);
        for f in &r.flags {
            let _ = writeln!(out, "  flag {f}");
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            EXIT_INVALID
        }
    }
}

pub fn verify(kb: &Path, scenario: &Path, trace: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let kb = match load_kb(kb, err) {
        Ok(kb) => kb,
        Err(code) => return code,
    };
    let scenario = match sim::load_scenario(scenario) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", scenario.display());
            return EXIT_INVALID;
        }
    };
    match sim::verify_replay_file(trace, kb, &scenario) {
        Ok(ReplayVerdict::Pass) => {
            let _ = writeln!(out, "pass");
            EXIT_OK
        }
        Ok(ReplayVerdict::Diverged { tick }) => {
            let _ = writeln!(out, "diverged at tick {tick}");
            EXIT_INVALID
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            EXIT_INVALID
        }
    }
}

/// Reads one answer line. `None` means the line is not an acceptable
/// answer. A bare word that is not JSON is taken as a term.
pub fn parse_answer_line(line: &str) -> Option<Answer> {
    let line = line.trim();
    if line.is_empty() {
        return None;
    }
    if line == "unknown" {
        return Some(Answer::Unknown);
    }
    match serde_json::from_str::<serde_json::Value>(line) {
        Ok(json) => Value::from_literal(&json).ok().map(Answer::Value),
        Err(_) if line.chars().all(|c| c.is_alphanumeric() || c == '_') => Some(Answer::Value(Value::term(line))),
        Err(_) => None,
    }
}

pub struct ConsultArgs<'a> {
    pub kb: &'a Path,
    pub goal: &'a str,
    pub config: Option<&'a Path>,
    pub transcript: Option<&'a Path>,
}

pub fn consult(args: &ConsultArgs<'_>, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let kb = match load_kb(args.kb, err) {
        Ok(kb) => kb,
        Err(code) => return code,
    };
    let config = match load_config(&kb, args.config, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let Some(goal) = AttrRef::parse(args.goal) else {
        let _ = writeln!(err, "bad goal reference `{}`", args.goal);
        return EXIT_INVALID;
    };
    let mut c = match Consultation::new(kb, config, &goal) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_INVALID;
        }
    };
    while let Step::Ask { question, .. } = c.current() {
        let mut answered = false;
        for _ in 0..MAX_ANSWER_ATTEMPTS {
            let _ = write!(out, "{} ({})? ", question.attr, question.domain);
            let _ = out.flush();
            let mut line = String::new();
            if input.read_line(&mut line).unwrap_or(0) == 0 {
                let _ = writeln!(out);
                break;
            }
            match parse_answer_line(&line).map(|a| c.answer(a)) {
                Some(Ok(_)) => {
                    answered = true;
                    break;
                }
                Some(Err(e)) => {
                    let _ = writeln!(out, "{e}");
                }
                None => {
                    let _ = writeln!(out, "expected a value literal or `unknown`");
                }
            }
        }
        if !answered {
            c.answer(Answer::Unknown).expect("question pending");
        }
    }
    let transcript: Transcript = c.transcript().expect("consultation finished");
    let _ = writeln!(out, "{}", transcript.outcome);
    if let Some(path) = args.transcript {
        let json = serde_json::to_string_pretty(&transcript).expect("transcripts serialize");
        if let Err(e) = fs::write(path, json) {
            let _ = writeln!(err, "{}: {e}", path.display());
            return EXIT_INVALID;
        }
    }
    EXIT_OK
}
