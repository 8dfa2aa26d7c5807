//! Drives the HTTP API in-process: opens a study session, answers every
//! question truthfully for the shown target, then stops and reads the
//! summary. Each request and response is printed as JSON.
//!
//! cargo run -p qrec-service --example http_session

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use http_body_util::BodyExt;
use qrec::factorization::train_offline;
use qrec::synthetic::{benchmark, BenchmarkConfig};
use qrec::{HyperParams, Recommender};
use qrec_service::{router, AppState, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Value {
    println!("> {method} {uri} {}", body.as_ref().map_or(String::new(), Value::to_string));
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value: Value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    println!("< {status} {value}\n");
    value
}

#[tokio::main]
async fn main() -> qrec::Result<()> {
    let data = benchmark(&BenchmarkConfig {
        n_users: 40,
        n_items: 32,
        n_entities: 80,
        ..Default::default()
    })?;
    let hp = HyperParams::default();
    let model = train_offline(&data.ratings, &hp)?;
    let corpus = Arc::new(data.corpus);
    let rec = Recommender::new(model, Arc::clone(&corpus), Arc::new(data.ratings))?;
    let app = router(AppState::new(rec, ServiceConfig::default()));

    call(&app, "GET", "/api/health", None).await;
    let target = corpus.items()[5].item_id.clone();
    let created = call(&app, "POST", "/api/sessions", Some(json!({"mode": "study", "target_item": target}))).await;
    let id = created["session_id"].as_str().unwrap().to_string();
    let target_idx = corpus.item_index(&target).unwrap();

    let mut state = created;
    for _ in 0..5 {
        if state["done"].as_bool().unwrap_or(true) {
            break;
        }
        let entity = state["question"]["entity"].as_str().unwrap();
        let e = corpus.entity_index(entity).unwrap();
        let answer = if corpus.contains(target_idx, e) { "yes" } else { "no" };
        let asked = state["questions_asked"].clone();
        state = call(
            &app,
            "POST",
            &format!("/api/sessions/{id}/answer"),
            Some(json!({"answer": answer, "questions_asked": asked})),
        )
        .await;
    }
    call(&app, "GET", &format!("/api/sessions/{id}/recommendations?k=5"), None).await;
    call(&app, "POST", &format!("/api/sessions/{id}/stop"), None).await;
    Ok(())
}
