//! HTTP service.
//!
//! | method | path                  | body                         | reply |
//! |--------|-----------------------|------------------------------|-------|
//! | GET    | `/api/health`         |                              | `{"status":"ok","version":..}` |
//! | POST   | `/api/preview`        | `{"config":..,"seed":..}`    | instance, text, metadata (nothing stored) |
//! | POST   | `/api/generate`       | `{"config":..,"count":..,"seed":..,"persist_rejects":..}` | `202 {"batch_id":..}` |
//! | GET    | `/api/batch/{id}`     |                              | job state, stats, stored names |
//! | GET    | `/api/instance/{name}`|                              | instance, text, metadata |
//! | POST   | `/api/solve/{name}`   | optional solver parameters   | solver metrics |
//! | POST   | `/api/bench`          | bench grid                   | acceptance matrix |
//!
//! Invalid input yields `422 {"errors":[{"field":..,"message":..}]}`; unknown
//! batches or instances yield 404. Everything else is served from the static
//! directory (the studio bundle).

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use evgen_core::bench::{run_bench, BenchGrid, BenchMatrix};
use evgen_core::io::write_instance_text;
use evgen_core::metadata::MetadataRecord;
use evgen_core::model::Instance;
use evgen_core::pipeline::{generate_batch_with, generate_one, instance_name, BatchOptions, BatchStats, Rejection};
use evgen_core::screening::ScreeningReport;
use evgen_core::solver::{evaluate_solution, solve, Solution, SolutionMetrics, SolverParams};
use evgen_core::store::{load_instance, persist_outcome, StoreError};
use evgen_core::{ConfigError, FieldIssue, GeneratorConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use tokio::sync::Semaphore;
use tower_http::services::ServeDir;

/// Upper bound on `cells x attempts` for a synchronous bench request.
pub const MAX_BENCH_ATTEMPTS: u64 = 20_000;
/// Upper bound on instances per generate request.
pub const MAX_GENERATE_COUNT: u64 = 10_000;

#[derive(Clone)]
pub struct AppState {
    pub data_root: PathBuf,
    jobs: Arc<RwLock<HashMap<String, Job>>>,
    workers: Arc<Semaphore>,
}

impl AppState {
    pub fn new(data_root: PathBuf, workers: usize) -> Self {
        Self { data_root, jobs: Arc::default(), workers: Arc::new(Semaphore::new(workers.max(1))) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub state: JobState,
    pub requested: u64,
    pub stats: Option<BatchSummary>,
    /// Names of stored instances (accepted, plus rejects when requested).
    pub files: Vec<String>,
    pub error: Option<String>,
}

/// Batch counters without per-attempt timings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchSummary {
    pub attempted: u64,
    pub accepted: u64,
    pub rejected_stage1: u64,
    pub rejected_stage2: u64,
    pub unknown_stage2: u64,
    pub acceptance_rate: Option<f64>,
    pub underflow: bool,
}

impl From<&BatchStats> for BatchSummary {
    fn from(s: &BatchStats) -> Self {
        Self {
            attempted: s.attempted,
            accepted: s.accepted,
            rejected_stage1: s.rejected_stage1,
            rejected_stage2: s.rejected_stage2,
            unknown_stage2: s.unknown_stage2,
            acceptance_rate: s.acceptance_rate().ok().map(evgen_core::bench::fixed),
            underflow: s.underflow,
        }
    }
}

#[derive(Debug)]
pub enum ApiError {
    Invalid(Vec<FieldIssue>),
    NotFound(String),
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    errors: &'a [FieldIssue],
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            ApiError::Invalid(issues) => {
                (StatusCode::UNPROCESSABLE_ENTITY, Json(serde_json::json!(ErrorBody { errors: &issues }))).into_response()
            }
            ApiError::NotFound(what) => {
                (StatusCode::NOT_FOUND, Json(serde_json::json!({ "error": format!("{what} not found") }))).into_response()
            }
            ApiError::Internal(msg) => {
                log::error!("{msg}");
                (StatusCode::INTERNAL_SERVER_ERROR, Json(serde_json::json!({ "error": msg }))).into_response()
            }
        }
    }
}

impl From<ConfigError> for ApiError {
    fn from(e: ConfigError) -> Self {
        ApiError::Invalid(e.issues)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(name) | StoreError::BadName(name) => ApiError::NotFound(format!("instance '{name}'")),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

/// Parses a JSON body; an empty body means all defaults.
fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::Invalid(vec![FieldIssue::new("body", e.to_string())]))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/preview", post(preview))
        .route("/api/generate", post(generate))
        .route("/api/batch/{id}", get(batch))
        .route("/api/instance/{name}", get(instance))
        .route("/api/solve/{name}", post(solve_stored))
        .route("/api/bench", post(bench))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreviewRequest {
    pub config: GeneratorConfig,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InstancePayload {
    pub name: String,
    pub status: String,
    pub instance: Instance,
    /// Instance in the text file format, byte-identical to the stored file.
    pub text: String,
    pub metadata: MetadataRecord,
    pub screening: ScreeningReport,
    pub rejection: Option<Rejection>,
}

async fn preview(body: Bytes) -> Result<Json<InstancePayload>, ApiError> {
    let req: PreviewRequest = parse_body(&body)?;
    req.config.validate()?;
    let outcome = blocking(move || generate_one(&req.config, req.seed)).await??;
    let name = instance_name(&outcome.metadata.config, &outcome.instance, outcome.metadata.seed);
    Ok(Json(InstancePayload {
        name,
        status: outcome.metadata.status.label().to_string(),
        text: write_instance_text(&outcome.instance),
        screening: outcome.metadata.screening.clone(),
        instance: outcome.instance,
        metadata: outcome.metadata,
        rejection: outcome.rejection,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateRequest {
    pub config: GeneratorConfig,
    pub count: u64,
    pub seed: u64,
    pub persist_rejects: bool,
}

impl Default for GenerateRequest {
    fn default() -> Self {
        Self { config: GeneratorConfig::default(), count: 1, seed: 0, persist_rejects: false }
    }
}

async fn generate(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: GenerateRequest = parse_body(&body)?;
    let mut issues = req.config.validate().err().map(|e| e.issues).unwrap_or_default();
    if req.count == 0 || req.count > MAX_GENERATE_COUNT {
        issues.push(FieldIssue::new("count", format!("must lie in 1..={MAX_GENERATE_COUNT}")));
    }
    if !issues.is_empty() {
        return Err(ApiError::Invalid(issues));
    }
    let id = uuid::Uuid::new_v4().to_string();
    let job = Job { id: id.clone(), state: JobState::Queued, requested: req.count, stats: None, files: vec![], error: None };
    state.jobs.write().expect("job table lock").insert(id.clone(), job);
    tokio::spawn(run_job(state, id.clone(), req));
    Ok((StatusCode::ACCEPTED, Json(serde_json::json!({ "batch_id": id }))).into_response())
}

async fn run_job(state: AppState, id: String, req: GenerateRequest) {
    let Ok(_permit) = state.workers.clone().acquire_owned().await else { return };
    let set = |f: &dyn Fn(&mut Job)| {
        if let Some(job) = state.jobs.write().expect("job table lock").get_mut(&id) {
            f(job);
        }
    };
    set(&|j| j.state = JobState::Running);
    let root = state.data_root.clone();
    let result = tokio::task::spawn_blocking(move || {
        let mut files = Vec::new();
        let batch = generate_batch_with(&req.config, req.count, req.seed, BatchOptions::default(), |outcome| {
            if let Some(p) = persist_outcome(outcome, &root, req.persist_rejects)? {
                files.push(p.name);
            }
            Ok::<(), StoreError>(())
        });
        match batch {
            Err(e) => Err(e.to_string()),
            Ok(Err(e)) => Err(e.to_string()),
            Ok(Ok(b)) => Ok((BatchSummary::from(&b.stats), files)),
        }
    })
    .await
    .unwrap_or_else(|e| Err(e.to_string()));
    match result {
        Ok((stats, files)) => set(&|j| {
            j.stats = Some(stats.clone());
            j.files = files.clone();
            j.state = JobState::Done;
        }),
        Err(msg) => set(&|j| {
            j.error = Some(msg.clone());
            j.state = JobState::Failed;
        }),
    }
}

async fn batch(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Job>, ApiError> {
    let jobs = state.jobs.read().expect("job table lock");
    jobs.get(&id).cloned().map(Json).ok_or_else(|| ApiError::NotFound(format!("batch '{id}'")))
}

async fn instance(State(state): State<AppState>, Path(name): Path<String>) -> Result<Json<serde_json::Value>, ApiError> {
    let root = state.data_root.clone();
    let stored = blocking(move || load_instance(&root, &name)).await??;
    Ok(Json(serde_json::json!({
        "name": stored.name,
        "status": stored.status.label(),
        "instance": stored.instance,
        "text": stored.text,
        "metadata": stored.metadata,
    })))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolveReply {
    pub name: String,
    pub solved: bool,
    pub metrics: Option<SolutionMetrics>,
    pub solution: Option<Solution>,
    pub error: Option<String>,
}

async fn solve_stored(State(state): State<AppState>, Path(name): Path<String>, body: Bytes) -> Result<Json<SolveReply>, ApiError> {
    let params: SolverParams = parse_body(&body)?;
    params.validate().map_err(|e| ApiError::Invalid(vec![FieldIssue::new("solver", e.to_string())]))?;
    let root = state.data_root.clone();
    let lookup = name.clone();
    let stored = blocking(move || load_instance(&root, &lookup)).await??;
    let reply = blocking(move || {
        let result = solve(&stored.instance, &params).and_then(|s| evaluate_solution(&stored.instance, &s).map(|m| (s, m)));
        match result {
            Ok((s, m)) => SolveReply { name, solved: true, metrics: Some(m), solution: Some(s), error: None },
            Err(e) => SolveReply { name, solved: false, metrics: None, solution: None, error: Some(e.to_string()) },
        }
    })
    .await?;
    Ok(Json(reply))
}

async fn bench(body: Bytes) -> Result<Json<BenchMatrix>, ApiError> {
    let grid: BenchGrid = parse_body(&body)?;
    grid.validate()?;
    if (grid.cell_count() as u64).saturating_mul(grid.attempts) > MAX_BENCH_ATTEMPTS {
        return Err(ApiError::Invalid(vec![FieldIssue::new(
            "attempts",
            format!("cells x attempts must not exceed {MAX_BENCH_ATTEMPTS}; use the command line for larger sweeps"),
        )]));
    }
    let matrix = blocking(move || run_bench(&grid, None)).await??;
    Ok(Json(matrix))
}
