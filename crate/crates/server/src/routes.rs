use std::convert::Infallible;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{any, get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use plantpulse_core::domain::catalog;
use plantpulse_core::query::{predefined, run, QueryError, QueryOptions};
use plantpulse_core::sensor::SensorError;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;
use tower_http::services::{ServeDir, ServeFile};

use crate::AppState;

const INDEX_HTML: &str = include_str!("../static/index.html");

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/sim/start", post(start))
        .route("/sim/stop", post(stop))
        .route("/sim/status", get(status))
        .route("/sim/advance", post(advance))
        .route("/metrics", get(metrics))
        .route("/metrics/stream", get(metrics_stream))
        .route("/sensors/config", get(get_config).put(put_config))
        .route("/query", post(query))
        .route("/query/predefined", get(list_predefined))
        .route("/tables", get(tables))
        .fallback(any(not_found));
    let app = Router::new().nest("/api", api);
    let app = match &state.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(dir.join("index.html")))),
        None => app.route("/", get(index)).fallback(any(not_found)),
    };
    app.layer(CorsLayer::permissive()).with_state(state)
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    offset: Option<usize>,
}

fn error(status: StatusCode, message: impl Into<String>, offset: Option<usize>) -> Response {
    (
        status,
        Json(ErrorBody {
            error: message.into(),
            offset,
        }),
    )
        .into_response()
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, String> {
    serde_json::from_slice(body).map_err(|e| format!("invalid request body: {e}"))
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

async fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, "not found", None)
}

#[derive(Debug, Serialize)]
struct Running {
    running: bool,
}

async fn start(State(state): State<AppState>) -> Json<Running> {
    let mut p = state.pipeline.lock();
    p.start();
    Json(Running { running: p.is_running() })
}

async fn stop(State(state): State<AppState>) -> Json<Running> {
    let mut p = state.pipeline.lock();
    p.stop();
    Json(Running { running: p.is_running() })
}

async fn status(State(state): State<AppState>) -> Response {
    Json(state.pipeline.lock().status()).into_response()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdvanceRequest {
    ms: u64,
}

async fn advance(State(state): State<AppState>, body: Bytes) -> Response {
    let req: AdvanceRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(message) => return error(StatusCode::BAD_REQUEST, message, None),
    };
    let mut p = state.pipeline.lock();
    match p.advance_by(req.ms) {
        Ok(outcome) => Json(json!({
            "sim_time_ms": p.now().millis(),
            "business_rows": outcome.business_rows,
            "sensor_rows": outcome.sensor_rows,
        }))
        .into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), None),
    }
}

async fn metrics(State(state): State<AppState>) -> Response {
    Json(state.metrics()).into_response()
}

async fn metrics_stream(State(state): State<AppState>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let mut interval = tokio::time::interval(state.metrics_interval);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    let frames = stream::unfold((state, interval), |(state, mut interval)| async move {
        interval.tick().await;
        let frame = state.metrics();
        let event = Event::default()
            .event("metrics")
            .json_data(&frame)
            .expect("frame serializes");
        Some((Ok(event), (state, interval)))
    });
    Sse::new(frames).keep_alive(KeepAlive::default())
}

async fn get_config(State(state): State<AppState>) -> Response {
    Json(state.pipeline.lock().sensor_config().clone()).into_response()
}

async fn put_config(State(state): State<AppState>, body: Bytes) -> Response {
    let Ok(text) = std::str::from_utf8(&body) else {
        return error(StatusCode::BAD_REQUEST, "request body is not UTF-8", None);
    };
    let mut p = state.pipeline.lock();
    match p.apply_sensor_config(text) {
        Ok(set) => Json(set.clone()).into_response(),
        Err(SensorError::InvalidConfig(violations)) => (
            StatusCode::BAD_REQUEST,
            Json(json!({
                "error": "invalid sensor configuration",
                "violations": violations,
            })),
        )
            .into_response(),
        Err(e) => error(StatusCode::BAD_REQUEST, e.to_string(), None),
    }
}

#[derive(Debug, Deserialize)]
struct QueryRequest {
    sql: String,
}

async fn query(State(state): State<AppState>, body: Bytes) -> Response {
    let req: QueryRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(message) => return error(StatusCode::BAD_REQUEST, message, None),
    };
    let snapshot = state.store.snapshot();
    let options = QueryOptions {
        timeout: Some(state.query_timeout),
        ..QueryOptions::default()
    };
    let result = tokio::task::spawn_blocking(move || run(&req.sql, &snapshot, &options)).await;
    match result {
        Ok(Ok(table)) => Json(table).into_response(),
        Ok(Err(e)) => query_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), None),
    }
}

fn query_error(e: QueryError) -> Response {
    let status = match e {
        QueryError::ResourceLimit { .. } | QueryError::Timeout => StatusCode::UNPROCESSABLE_ENTITY,
        QueryError::Syntax { .. } | QueryError::Semantic(_) | QueryError::Store(_) => StatusCode::BAD_REQUEST,
    };
    let offset = e.offset();
    error(status, e.to_string(), offset)
}

async fn list_predefined() -> Response {
    Json(predefined()).into_response()
}

async fn tables() -> Response {
    Json(catalog()).into_response()
}
