use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use evgen::api::{router, AppState};
use evgen_core::config::GeneratorConfig;
use evgen_core::io::write_instance_text;
use evgen_core::pipeline::generate_one;
use evgen_core::spatial::SpatialFamily;
use evgen_core::Regime;
use serde_json::{json, Value};
use std::path::Path;
use std::time::Duration;
use tower::ServiceExt;

fn app(root: &Path) -> Router {
    router(AppState::new(root.to_path_buf(), 2), None)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, value)
}

fn preview_config() -> Value {
    serde_json::to_value(GeneratorConfig::cell(SpatialFamily::C, Regime::Medium, 10, 3)).unwrap()
}

#[tokio::test]
async fn health_is_ok() {
    let dir = tempfile::tempdir().unwrap();
    let (status, body) = call(&app(dir.path()), "GET", "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
}

#[tokio::test]
async fn preview_returns_instance_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (status, body) = call(&app(dir.path()), "POST", "/api/preview", Some(json!({ "config": preview_config(), "seed": 4 }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["instance"]["customers"].as_array().unwrap().len(), 10);
    assert_eq!(body["instance"]["stations"].as_array().unwrap().len(), 3);
    assert!(body["screening"]["passed"].is_boolean());
    assert_eq!(body["metadata"]["schema_version"], 1);
    // Nothing is stored by a preview.
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[tokio::test]
async fn preview_matches_core_generation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GeneratorConfig::cell(SpatialFamily::RC, Regime::Tight, 20, 4);
    let (_, body) =
        call(&app(dir.path()), "POST", "/api/preview", Some(json!({ "config": cfg, "seed": 11 }))).await;
    let direct = generate_one(&cfg, 11).unwrap();
    assert_eq!(body["text"].as_str().unwrap(), write_instance_text(&direct.instance));
    assert_eq!(body["metadata"], serde_json::to_value(&direct.metadata).unwrap());
}

#[tokio::test]
async fn invalid_phi_is_422_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preview_config();
    cfg["temporal"]["phi"] = json!(1.5);
    let (status, body) = call(&app(dir.path()), "POST", "/api/preview", Some(json!({ "config": cfg }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let errors = body["errors"].as_array().unwrap();
    assert!(errors.iter().any(|e| e["field"] == "temporal.phi" && e["message"].is_string()));
}

#[tokio::test]
async fn malformed_body_is_422() {
    let dir = tempfile::tempdir().unwrap();
    let (status, body) = call(&app(dir.path()), "POST", "/api/preview", Some(json!({ "nonsense": 1 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["errors"][0]["field"], "body");
}

#[tokio::test]
async fn unknown_names_are_404() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    assert_eq!(call(&app, "GET", "/api/instance/missing", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/api/batch/missing", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "POST", "/api/solve/missing", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/api/instance/..%2Fetc", None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn generate_poll_fetch_and_solve() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let cfg = GeneratorConfig::cell(SpatialFamily::C, Regime::Wide, 5, 2);
    let (status, body) = call(&app, "POST", "/api/generate", Some(json!({ "config": cfg, "count": 2, "seed": 3 }))).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let id = body["batch_id"].as_str().unwrap().to_string();

    let mut job = Value::Null;
    for _ in 0..200 {
        let (status, body) = call(&app, "GET", &format!("/api/batch/{id}"), None).await;
        assert_eq!(status, StatusCode::OK);
        job = body;
        if job["state"] == "done" || job["state"] == "failed" {
            break;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    assert_eq!(job["state"], "done", "{job}");
    let stats = &job["stats"];
    assert_eq!(stats["accepted"], 2);
    let total: u64 = ["accepted", "rejected_stage1", "rejected_stage2", "unknown_stage2"]
        .iter()
        .map(|k| stats[k].as_u64().unwrap())
        .sum();
    assert_eq!(total, stats["attempted"].as_u64().unwrap());
    let files = job["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);

    let name = files[0].as_str().unwrap();
    let (status, inst) = call(&app, "GET", &format!("/api/instance/{name}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(inst["status"], "feasible");
    let on_disk = std::fs::read_to_string(dir.path().join("feasible").join(format!("{name}.txt"))).unwrap();
    assert_eq!(inst["text"].as_str().unwrap(), on_disk);

    let (status, solved) =
        call(&app, "POST", &format!("/api/solve/{name}"), Some(json!({ "max_iterations": 10 }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(solved["solved"], true, "{solved}");
    assert!(solved["metrics"]["ev_count"].as_u64().unwrap() >= 1);
}

#[tokio::test]
async fn generate_rejects_zero_count() {
    let dir = tempfile::tempdir().unwrap();
    let (status, body) = call(&app(dir.path()), "POST", "/api/generate", Some(json!({ "count": 0 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["errors"][0]["field"], "count");
}

#[tokio::test]
async fn bench_endpoint_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let grid = json!({ "families": ["C"], "regimes": ["wide", "tight"], "sizes": [[20, 4], [30, 4]], "attempts": 5 });
    let (status, body) = call(&app(dir.path()), "POST", "/api/bench", Some(grid)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["cells"].as_array().unwrap().len(), 4);
    assert_eq!(body["incomplete"], false);

    let too_big = json!({ "attempts": 1000 });
    let (status, _) = call(&app(dir.path()), "POST", "/api/bench", Some(too_big)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn static_bundle_is_served() {
    let data = tempfile::tempdir().unwrap();
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<!doctype html><title>studio</title>").unwrap();
    let app = router(AppState::new(data.path().to_path_buf(), 1), Some(ui.path().to_path_buf()));
    let resp = app.clone().oneshot(Request::get("/index.html").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let body = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    assert!(String::from_utf8_lossy(&body).contains("studio"));
    let root = app.clone().oneshot(Request::get("/").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(root.status(), StatusCode::OK);
    let (status, _) = call(&app, "GET", "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
}
