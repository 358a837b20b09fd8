//! HTTP session service. Each session owns one engine state or one
//! consultation; requests against a session are serialized by its lock.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chronorule_core::engine::{ConsultError, Consultation, EngineState, Step};
use chronorule_core::kb::{AttrRef, CompiledKb, KbError};
use chronorule_core::sim::resolve_config;
use chronorule_core::values::Value;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as JsonValue};
use thiserror::Error;
use tower_http::services::ServeDir;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("invalid knowledge base")]
    InvalidKb(Vec<String>),
    #[error("{0}")]
    Conflict(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) | ApiError::InvalidKb(_) => StatusCode::BAD_REQUEST,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
        };
        let mut body = json!({ "error": self.to_string() });
        if let ApiError::InvalidKb(diags) = &self {
            body["diagnostics"] = json!(diags);
        }
        (status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Simulation,
    Consultation,
}

enum Session {
    Simulation(Box<EngineState>),
    Consultation(Box<Consultation>),
}

#[derive(Default)]
struct Registry {
    next: AtomicU64,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

impl Registry {
    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        let map = self.sessions.lock().expect("registry lock");
        map.get(id).cloned().ok_or_else(|| ApiError::NotFound(id.to_string()))
    }
}

#[derive(Clone, Default)]
pub struct AppState(Arc<Registry>);

/// Bodies must be JSON objects; serde would otherwise accept a struct
/// written as an array.
fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    let bad = |e: String| ApiError::BadRequest(format!("malformed body: {e}"));
    let json: JsonValue = serde_json::from_slice(body).map_err(|e| bad(e.to_string()))?;
    if !json.is_object() {
        return Err(bad("expected a JSON object".into()));
    }
    serde_json::from_value(json).map_err(|e| bad(e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    kb: String,
    #[serde(default)]
    config: Option<JsonValue>,
    #[serde(default)]
    mode: Mode,
    #[serde(default)]
    goal: Option<String>,
}

async fn create(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateBody = parse_body(&body)?;
    let kb = match CompiledKb::from_source(&req.kb) {
        Ok(kb) => Arc::new(kb),
        Err(KbError::Syntax(e)) => return Err(ApiError::InvalidKb(vec![e.to_string()])),
        Err(KbError::Invalid(d)) => return Err(ApiError::InvalidKb(d.iter().map(ToString::to_string).collect())),
    };
    let config = resolve_config(&kb, req.config.as_ref()).map_err(ApiError::BadRequest)?;
    let session = match req.mode {
        Mode::Simulation => {
            let engine = EngineState::new(kb, config).map_err(|e| ApiError::BadRequest(e.to_string()))?;
            Session::Simulation(Box::new(engine))
        }
        Mode::Consultation => {
            let goal = req.goal.as_deref().ok_or_else(|| ApiError::BadRequest("consultation needs a `goal`".into()))?;
            let goal = AttrRef::parse(goal).ok_or_else(|| ApiError::BadRequest(format!("bad goal `{goal}`")))?;
            Session::Consultation(Box::new(
                Consultation::new(kb, config, &goal).map_err(|e| ApiError::BadRequest(e.to_string()))?,
            ))
        }
    };
    let id = format!("s{}", app.0.next.fetch_add(1, Ordering::Relaxed) + 1);
    app.0.sessions.lock().expect("registry lock").insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "mode": req.mode }))).into_response())
}

fn wm_rows<'a>(facts: impl Iterator<Item = (&'a AttrRef, &'a chronorule_core::wm::Fact)>) -> Vec<JsonValue> {
    facts
        .map(|(attr, f)| {
            json!({
                "attr": attr,
                "value": f.value,
                "certainty": f.value.certainty,
                "asserted_at": f.asserted_at,
                "provenance": f.provenance,
            })
        })
        .collect()
}

async fn state(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<JsonValue>, ApiError> {
    let session = app.0.get(&id)?;
    let s = session.lock().expect("session lock");
    Ok(Json(match &*s {
        Session::Simulation(e) => json!({
            "id": id,
            "mode": Mode::Simulation,
            "next_tick": e.next_tick(),
            "wm": wm_rows(e.wm().facts()),
            "timeline": e.timeline(),
            "conflict_set": e.conflict_set(),
        }),
        Session::Consultation(c) => json!({
            "id": id,
            "mode": Mode::Consultation,
            "wm": wm_rows(c.wm().facts()),
            "step": c.current(),
            "log": c.log(),
        }),
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TickBody {
    #[serde(default)]
    set: serde_json::Map<String, JsonValue>,
}

async fn tick(State(app): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Response, ApiError> {
    let session = app.0.get(&id)?;
    let req: TickBody = if body.is_empty() { TickBody { set: Default::default() } } else { parse_body(&body)? };
    let mut set = Vec::with_capacity(req.set.len());
    for (k, v) in &req.set {
        let attr = AttrRef::parse(k).ok_or_else(|| ApiError::BadRequest(format!("bad attribute reference {k:?}")))?;
        let value = Value::from_literal(v).map_err(|e| ApiError::BadRequest(format!("{k}: {e}")))?;
        set.push((attr, value));
    }
    let mut s = session.lock().expect("session lock");
    let Session::Simulation(engine) = &mut *s else {
        return Err(ApiError::Conflict("session is in consultation mode".into()));
    };
    let record = engine.run_cycle(&set).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(Json(record).into_response())
}

async fn question(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<JsonValue>, ApiError> {
    let session = app.0.get(&id)?;
    let s = session.lock().expect("session lock");
    Ok(Json(match &*s {
        Session::Consultation(c) => match c.current() {
            Step::Ask { question, candidates } => {
                json!({ "pending": true, "question": question, "candidates": candidates })
            }
            Step::Done { outcome } => json!({ "pending": false, "outcome": outcome }),
        },
        Session::Simulation(_) => json!({ "pending": false }),
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerBody {
    question_id: u64,
    answer: JsonValue,
}

async fn answer(State(app): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Response, ApiError> {
    let session = app.0.get(&id)?;
    let req: AnswerBody = parse_body(&body)?;
    let mut s = session.lock().expect("session lock");
    let Session::Consultation(c) = &mut *s else {
        return Err(ApiError::Conflict("no question is pending".into()));
    };
    match c.pending() {
        None => return Err(ApiError::Conflict("no question is pending".into())),
        Some(q) if q.id != req.question_id => {
            return Err(ApiError::Conflict(format!("question {} is not pending", req.question_id)))
        }
        Some(_) => {}
    }
    let answer = c.parse_answer(&req.answer).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let step = c.answer(answer).map_err(|e| match e {
        ConsultError::NoPendingQuestion => ApiError::Conflict(e.to_string()),
        ConsultError::InvalidAnswer(_) => ApiError::BadRequest(e.to_string()),
    })?;
    Ok(Json(step).into_response())
}

async fn timeline(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<JsonValue>, ApiError> {
    let session = app.0.get(&id)?;
    let s = session.lock().expect("session lock");
    Ok(Json(match &*s {
        Session::Simulation(e) => json!(e.timeline()),
        Session::Consultation(_) => json!({ "now": null, "lanes": [], "anomalies": [] }),
    }))
}

async fn delete(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<StatusCode, ApiError> {
    match app.0.sessions.lock().expect("registry lock").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::NotFound(id)),
    }
}

/// The API routes, optionally serving static files for everything else.
pub fn router(static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", axum::routing::delete(delete))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/tick", post(tick))
        .route("/sessions/{id}/question", get(question))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/timeline", get(timeline))
        .with_state(AppState::default());
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(port: u16, static_dir: Option<&Path>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(static_dir)).await
}
