use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use plantpulse_core::pipeline::PipelineOptions;
use plantpulse_server::{router, AppState, MetricsFrame, RunningServer, ServerConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn stepped_config() -> ServerConfig {
    ServerConfig {
        pipeline: PipelineOptions::stepped(42),
        ..ServerConfig::default()
    }
}

fn app_with(config: ServerConfig) -> (Router, AppState) {
    let state = AppState::new(&config).unwrap();
    (router(state.clone()), state)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(body.to_string())).await
}

async fn sql(app: &Router, text: &str) -> (StatusCode, Value) {
    post(app, "/api/query", json!({ "sql": text })).await
}

#[tokio::test]
async fn start_and_stop_are_idempotent() {
    let (app, _) = app_with(stepped_config());
    assert_eq!(get(&app, "/api/sim/status").await.1["running"], false);
    assert_eq!(post(&app, "/api/sim/start", json!({})).await.1, json!({"running": true}));
    assert_eq!(post(&app, "/api/sim/start", json!({})).await, (StatusCode::OK, json!({"running": true})));
    assert_eq!(post(&app, "/api/sim/stop", json!({})).await.1, json!({"running": false}));
    assert_eq!(post(&app, "/api/sim/stop", json!({})).await, (StatusCode::OK, json!({"running": false})));
}

#[tokio::test]
async fn fresh_server_reports_zero_metrics() {
    let (app, _) = app_with(stepped_config());
    let (status, body) = get(&app, "/api/metrics").await;
    assert_eq!(status, StatusCode::OK);
    let frame: MetricsFrame = serde_json::from_value(body).unwrap();
    assert_eq!(frame.business_rows_total, 0);
    assert_eq!(frame.sensor_rows_total, 0);
    assert_eq!(frame.business_rows_per_s, 0.0);
    assert_eq!(frame.sensor_rows_per_s, 0.0);
    assert_eq!(frame.sim_time, 0);
}

#[tokio::test]
async fn advancing_grows_totals_only_while_running() {
    let (app, _) = app_with(stepped_config());
    post(&app, "/api/sim/start", json!({})).await;
    let (status, body) = post(&app, "/api/sim/advance", json!({"ms": 10_000})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["sim_time_ms"], 10_000);
    assert_eq!(body["sensor_rows"], 600);
    let running: MetricsFrame = serde_json::from_value(get(&app, "/api/metrics").await.1).unwrap();
    assert_eq!(running.sensor_rows_total, 600);
    assert!(running.business_rows_total > 0);

    post(&app, "/api/sim/stop", json!({})).await;
    post(&app, "/api/sim/advance", json!({"ms": 10_000})).await;
    let stopped: MetricsFrame = serde_json::from_value(get(&app, "/api/metrics").await.1).unwrap();
    assert_eq!(stopped.sensor_rows_total, running.sensor_rows_total);
    assert_eq!(stopped.business_rows_total, running.business_rows_total);
    assert_eq!(stopped.sim_time, 10_000);
}

#[tokio::test]
async fn advance_rejects_malformed_body() {
    let (app, _) = app_with(stepped_config());
    let (status, body) = call(&app, Method::POST, "/api/sim/advance", Some("{\"ms\": -1}".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("invalid request body"));
}

#[tokio::test]
async fn sensor_config_round_trips_and_rejects_atomically() {
    let (app, _) = app_with(stepped_config());
    let (status, initial) = get(&app, "/api/sensors/config").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(initial["revision"], 1);
    assert_eq!(initial["sensors"].as_array().unwrap().len(), 6);

    let mut doubled = initial.clone();
    let rate = doubled["sensors"][0]["rate_hz"].as_f64().unwrap();
    doubled["sensors"][0]["rate_hz"] = json!(rate * 2.0);
    let (status, applied) = call(&app, Method::PUT, "/api/sensors/config", Some(doubled.to_string())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(applied["revision"], 2);
    let (_, after) = get(&app, "/api/sensors/config").await;
    assert_eq!(after["sensors"][0]["rate_hz"].as_f64().unwrap(), rate * 2.0);

    let mut bad = after.clone();
    bad["sensors"][1]["workplace_id"] = json!(99);
    let (status, rejected) = call(&app, Method::PUT, "/api/sensors/config", Some(bad.to_string())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let violations: Vec<String> = serde_json::from_value(rejected["violations"].clone()).unwrap();
    assert!(violations.iter().any(|v| v.contains("unknown workplace 99")), "{violations:?}");
    assert_eq!(get(&app, "/api/sensors/config").await.1, after);

    let (status, _) = call(&app, Method::PUT, "/api/sensors/config", Some("not json".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/api/sensors/config").await.1, after);
}

#[tokio::test]
async fn query_endpoint_maps_results_and_errors() {
    let (app, _) = app_with(stepped_config());
    let (status, body) = sql(&app, "SELECT COUNT(*) FROM SUPPLIER").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["rows"], json!([[3]]));
    assert_eq!(body["columns"][0]["type"], "int64");
    assert!(body["elapsed_ms"].as_f64().unwrap() >= 0.0);

    let (status, body) = sql(&app, "SELECT NAME FROM SUPPLIER WHERE").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["offset"], 31);
    assert!(body["error"].as_str().unwrap().contains("syntax error"));

    let (status, body) = sql(&app, "SELECT NOPE FROM SUPPLIER").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("unknown column"));

    let (status, _) = call(&app, Method::POST, "/api/query", Some("{}".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn nulls_are_explicit_in_results() {
    let (app, _) = app_with(stepped_config());
    post(&app, "/api/sim/start", json!({})).await;
    post(&app, "/api/sim/advance", json!({"ms": 1_000})).await;
    let (status, body) = sql(&app, "SELECT NOISE_VALUE FROM SENSOR_DATA WHERE SENSOR_ID = 1 LIMIT 1").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["rows"], json!([[null]]));
}

#[tokio::test]
async fn resource_guard_and_timeout_return_422() {
    let (app, _) = app_with(stepped_config());
    post(&app, "/api/sim/start", json!({})).await;
    post(&app, "/api/sim/advance", json!({"ms": 120_000})).await;
    let cross = "SELECT COUNT(*) FROM SENSOR_DATA a JOIN SENSOR_DATA b ON a.ID <> b.ID";
    let (status, body) = sql(&app, cross).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("intermediate rows"), "{body}");

    let (app, _) = app_with(ServerConfig {
        query_timeout: Duration::from_millis(1),
        ..stepped_config()
    });
    post(&app, "/api/sim/start", json!({})).await;
    post(&app, "/api/sim/advance", json!({"ms": 60_000})).await;
    let (status, body) = sql(&app, "SELECT COUNT(*) FROM SENSOR_DATA a JOIN SENSOR_DATA b ON a.ID >= b.ID").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("time limit"), "{body}");
}

#[tokio::test]
async fn predefined_queries_are_listed_and_runnable() {
    let (app, _) = app_with(stepped_config());
    post(&app, "/api/sim/start", json!({})).await;
    post(&app, "/api/sim/advance", json!({"ms": 600_000})).await;
    let (status, list) = get(&app, "/api/query/predefined").await;
    assert_eq!(status, StatusCode::OK);
    let list = list.as_array().unwrap();
    assert_eq!(list.len(), 2);
    for q in list {
        assert!(q["name"].is_string() && q["description"].is_string());
        let (status, body) = sql(&app, q["sql"].as_str().unwrap()).await;
        assert_eq!(status, StatusCode::OK, "{}: {body}", q["name"]);
        assert!(!body["rows"].as_array().unwrap().is_empty(), "{}", q["name"]);
    }
    let (_, q1) = sql(&app, list[0]["sql"].as_str().unwrap()).await;
    assert!(q1["rows"].as_array().unwrap().len() <= 10);
}

#[tokio::test]
async fn tables_lists_the_catalog() {
    let (app, _) = app_with(stepped_config());
    let (status, body) = get(&app, "/api/tables").await;
    assert_eq!(status, StatusCode::OK);
    let sensor = body["tables"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["name"] == "SENSOR_DATA")
        .unwrap();
    let names: Vec<&str> = sensor["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "ID",
            "WORKPLACE_ID",
            "SENSOR_ID",
            "DATE",
            "TEMPERATURE_VALUE",
            "TEMPERATURE_UNIT",
            "NOISE_VALUE",
            "NOISE_UNIT",
            "VIBRATION_VALUE",
            "VIBRATION_UNIT"
        ]
    );
}

#[tokio::test]
async fn unknown_api_paths_are_404_and_root_serves_html() {
    let (app, _) = app_with(stepped_config());
    let (status, body) = get(&app, "/api/nothing").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "not found");

    let resp = app
        .clone()
        .oneshot(Request::get("/").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert!(resp.headers()[header::CONTENT_TYPE].to_str().unwrap().starts_with("text/html"));
}

#[tokio::test]
async fn static_dir_is_served_under_root() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<p>ui</p>").unwrap();
    std::fs::write(dir.path().join("app.js"), "console.log(1)").unwrap();
    let (app, _) = app_with(ServerConfig {
        static_dir: Some(dir.path().to_path_buf()),
        ..stepped_config()
    });
    for (path, expected) in [("/", "<p>ui</p>"), ("/app.js", "console.log(1)"), ("/deep/link", "<p>ui</p>")] {
        let resp = app
            .clone()
            .oneshot(Request::get(path).body(Body::empty()).unwrap())
            .await
            .unwrap();
        assert_eq!(resp.status(), StatusCode::OK, "{path}");
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        assert_eq!(bytes, expected.as_bytes(), "{path}");
    }
    assert_eq!(get(&app, "/api/sim/status").await.0, StatusCode::OK);
}

#[tokio::test]
async fn cors_allows_any_origin() {
    let (app, _) = app_with(stepped_config());
    let req = Request::get("/api/sim/status")
        .header(header::ORIGIN, "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");
}

#[tokio::test]
async fn metrics_stream_emits_named_frames() {
    let (app, _) = app_with(ServerConfig {
        metrics_interval: Duration::from_millis(50),
        ..stepped_config()
    });
    let resp = app
        .oneshot(Request::get("/api/metrics/stream").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()[header::CONTENT_TYPE], "text/event-stream");
    let mut body = resp.into_body();
    let mut text = String::new();
    while text.matches("event: metrics").count() < 3 {
        let frame = tokio::time::timeout(Duration::from_secs(5), body.frame())
            .await
            .expect("frame within timeout")
            .unwrap()
            .unwrap();
        if let Ok(data) = frame.into_data() {
            text.push_str(std::str::from_utf8(&data).unwrap());
        }
    }
    let frames: Vec<MetricsFrame> = text
        .lines()
        .filter_map(|l| l.strip_prefix("data: "))
        .map(|d| serde_json::from_str(d).unwrap())
        .collect();
    assert!(frames.len() >= 3);
    assert!(frames.windows(2).all(|w| w[1].wall_time >= w[0].wall_time));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn realtime_server_ingests_while_running() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let config = ServerConfig {
        tick: Duration::from_millis(20),
        ..ServerConfig::default()
    };
    let server = RunningServer::start(config, listener).await.unwrap();
    assert!(server.state.pipeline().lock().start());
    tokio::time::sleep(Duration::from_millis(600)).await;
    let sensor_rows = server.state.store().snapshot().row_count("SENSOR_DATA").unwrap();
    assert!((24..=48).contains(&sensor_rows), "{sensor_rows}");
    server.state.pipeline().lock().stop();
    let frozen = server.state.store().total_rows();
    tokio::time::sleep(Duration::from_millis(200)).await;
    assert_eq!(server.state.store().total_rows(), frozen);
    server.shutdown();
}
