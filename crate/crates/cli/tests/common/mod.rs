//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value as Json};
use tower::ServiceExt;

pub fn demo(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo").join(name)
}

pub fn demo_source(name: &str) -> String {
    std::fs::read_to_string(demo(name)).expect("demo file")
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Json) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .expect("request");
    let resp = app.clone().oneshot(req).await.expect("infallible");
    let status = resp.status();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    let json = if bytes.is_empty() { Json::Null } else { serde_json::from_slice(&bytes).expect("json body") };
    (status, json)
}

/// Drives a consultation over HTTP, answering each question from `answers`
/// in order. Returns the question log and the final outcome.
pub async fn http_consult(app: &Router, kb: &str, goal: &str, answers: &[Json]) -> (Json, Json) {
    let body = json!({ "kb": kb, "mode": "consultation", "goal": goal }).to_string();
    let (status, created) = call(app, Method::POST, "/sessions", Some(&body)).await;
    assert_eq!(status, StatusCode::CREATED, "{created}");
    let id = created["id"].as_str().expect("id").to_string();
    let mut answers = answers.iter();
    loop {
        let (_, q) = call(app, Method::GET, &format!("/sessions/{id}/question"), None).await;
        if q["pending"] == json!(false) {
            let (_, state) = call(app, Method::GET, &format!("/sessions/{id}/state"), None).await;
            return (state["log"].clone(), q["outcome"].clone());
        }
        let answer = answers.next().cloned().unwrap_or(json!("unknown"));
        let body = json!({ "question_id": q["question"]["id"], "answer": answer }).to_string();
        let (status, step) = call(app, Method::POST, &format!("/sessions/{id}/answer"), Some(&body)).await;
        assert_eq!(status, StatusCode::OK, "{step}");
    }
}
