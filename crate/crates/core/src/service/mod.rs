//! HTTP service hosting evolution runs and render endpoints.
//!
//! JSON in and out; SVG and PNG renders are served with their own media
//! types. The route table is described in `openapi.yaml`.

pub mod runs;

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Error;
use crate::evolution::{EvoConfig, GenerationSnapshot};
use crate::fitness::Evaluator;
use crate::io::document::StencilDocument;
use crate::io::png::encode_png;
use crate::io::shapes::{render_specimen, ShapeLibrary, ShapeMapping, DEFAULT_TRACKING};
use crate::io::svg::{export_svg_mask, export_svg_stencil};
use crate::output::{population_document, write_run};
use crate::raster::render;
use crate::stencil::Stencil;
use crate::targets::{builtin_alphabet, load_targets, TargetSet};
use runs::{RunEntry, RunState, TransitionError};

pub use runs::SnapshotStore;

pub const OPENAPI: &str = include_str!("../../openapi.yaml");
pub const BUILTIN: &str = "builtin";
pub const DEFAULT_CAPACITY: usize = 4;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Each subdirectory holding a `manifest.txt` is a named target set.
    pub targets_root: Option<PathBuf>,
    /// Each `*.lib` file is a named shape library.
    pub shape_libs: Option<PathBuf>,
    /// Where deleted runs persist their latest snapshot.
    pub runs_dir: Option<PathBuf>,
    /// Concurrent running or paused runs.
    pub capacity: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            targets_root: None,
            shape_libs: None,
            runs_dir: None,
            capacity: DEFAULT_CAPACITY,
        }
    }
}

pub struct App {
    config: ServiceConfig,
    libraries: BTreeMap<String, ShapeLibrary>,
    runs: Mutex<BTreeMap<String, Arc<RunEntry>>>,
    next_id: AtomicU64,
}

impl App {
    pub fn new(config: ServiceConfig) -> crate::Result<Self> {
        let mut libraries = BTreeMap::new();
        libraries.insert(BUILTIN.to_string(), ShapeLibrary::builtin());
        if let Some(dir) = &config.shape_libs {
            let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
            for entry in entries {
                let path = entry.map_err(|e| Error::io(dir, e))?.path();
                if path.extension().is_some_and(|x| x == "lib") {
                    if let Some(name) = path.file_stem().and_then(|s| s.to_str()) {
                        libraries.insert(name.to_string(), ShapeLibrary::load(&path)?);
                    }
                }
            }
        }
        Ok(App {
            config,
            libraries,
            runs: Mutex::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    fn runs(&self) -> MutexGuard<'_, BTreeMap<String, Arc<RunEntry>>> {
        self.runs.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn run(&self, id: &str) -> Result<Arc<RunEntry>, ApiError> {
        self.runs()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no run {id:?}")))
    }

    fn target_names(&self) -> Vec<String> {
        let mut names = vec![BUILTIN.to_string()];
        if let Some(root) = &self.config.targets_root {
            if let Ok(entries) = fs::read_dir(root) {
                let mut found: Vec<String> = entries
                    .filter_map(|e| e.ok())
                    .filter(|e| e.path().join("manifest.txt").is_file())
                    .filter_map(|e| e.file_name().to_str().map(String::from))
                    .collect();
                found.sort();
                names.extend(found);
            }
        }
        names
    }

    fn targets(&self, name: &str, canvas_size: usize) -> Result<TargetSet, ApiError> {
        if name == BUILTIN {
            return Ok(builtin_alphabet(canvas_size));
        }
        let safe = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        let root = self.config.targets_root.as_ref().filter(|_| safe);
        let root = root.ok_or_else(|| ApiError::bad_request(format!("unknown target set {name:?}")))?;
        let dir = root.join(name);
        if !dir.join("manifest.txt").is_file() {
            return Err(ApiError::bad_request(format!("unknown target set {name:?}")));
        }
        load_targets(&dir).map_err(ApiError::from)
    }

    fn library(&self, name: &str) -> Result<&ShapeLibrary, ApiError> {
        self.libraries
            .get(name)
            .ok_or_else(|| ApiError::bad_request(format!("unknown shape library {name:?}")))
    }
}

impl Drop for App {
    fn drop(&mut self) {
        for run in self.runs().values() {
            run.stop();
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } | Error::Png(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type AppState = State<Arc<App>>;

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn svg_response(svg: String) -> Response {
    ([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRun {
    #[serde(default = "builtin_name")]
    targets: String,
    #[serde(default)]
    config: EvoConfig,
    #[serde(default)]
    threads: Option<usize>,
}

fn builtin_name() -> String {
    BUILTIN.to_string()
}

#[derive(Debug, Serialize)]
pub struct RunHandle {
    pub run_id: String,
    pub state: RunState,
    /// Latest completed generation; absent until generation 0 is evaluated.
    pub current_generation: Option<usize>,
    pub generations: usize,
    pub targets: String,
    pub error: Option<String>,
    pub config: EvoConfig,
}

fn handle(run: &RunEntry) -> RunHandle {
    let shared = run.shared();
    RunHandle {
        run_id: run.id.clone(),
        state: shared.state,
        current_generation: shared.snapshots.latest().map(|s| s.generation),
        generations: run.config.generations,
        targets: run.targets_name.clone(),
        error: shared.error.clone(),
        config: run.config.clone(),
    }
}

async fn create_run(State(app): AppState, body: Bytes) -> ApiResult<Response> {
    let request: CreateRun = parse_body(&body)?;
    let config = request.config;
    config.validate()?;
    if request.threads == Some(0) {
        return Err(ApiError::bad_request("threads must be at least 1"));
    }
    let targets = app.targets(&request.targets, config.render.canvas_size)?;
    let evaluator = Evaluator::new(targets.clone(), config.render, config.search, config.fitness.clone())?;

    let mut runs = app.runs();
    let active = runs.values().filter(|r| r.shared().state.is_active()).count();
    if active >= app.config.capacity {
        return Err(ApiError::conflict(format!(
            "capacity of {} concurrent runs reached",
            app.config.capacity
        )));
    }
    let n = app.next_id.fetch_add(1, Ordering::Relaxed);
    let id = format!("r{n:04}-{}", &config.digest()[..6]);
    let entry = RunEntry::start(id.clone(), config, request.targets, targets, evaluator, request.threads);
    runs.insert(id, Arc::clone(&entry));
    drop(runs);
    Ok((StatusCode::CREATED, Json(handle(&entry))).into_response())
}

async fn list_runs(State(app): AppState) -> Json<Vec<RunHandle>> {
    let runs: Vec<Arc<RunEntry>> = app.runs().values().cloned().collect();
    Json(runs.iter().map(|r| handle(r)).collect())
}

async fn get_run(State(app): AppState, Path(id): Path<String>) -> ApiResult<Json<RunHandle>> {
    let run = app.run(&id)?;
    Ok(Json(handle(&run)))
}

async fn pause_run(State(app): AppState, Path(id): Path<String>) -> ApiResult<Json<RunHandle>> {
    let run = app.run(&id)?;
    run.pause().map_err(transition_error)?;
    Ok(Json(handle(&run)))
}

async fn resume_run(State(app): AppState, Path(id): Path<String>) -> ApiResult<Json<RunHandle>> {
    let run = app.run(&id)?;
    run.resume().map_err(transition_error)?;
    Ok(Json(handle(&run)))
}

fn transition_error(e: TransitionError) -> ApiError {
    match e {
        TransitionError::Illegal(state) => {
            ApiError::conflict(format!("run is {} and can no longer change state", json!(state)))
        }
    }
}

async fn delete_run(State(app): AppState, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let run = app
        .runs()
        .remove(&id)
        .ok_or_else(|| ApiError::not_found(format!("no run {id:?}")))?;
    run.stop();
    let (latest, stats) = {
        let shared = run.shared();
        (shared.snapshots.latest().cloned(), shared.stats.clone())
    };
    let persisted = match (&app.config.runs_dir, latest) {
        (Some(dir), Some(snap)) => {
            let dir = dir.join(&run.id);
            let app_dir = dir.clone();
            let run = Arc::clone(&run);
            tokio::task::spawn_blocking(move || {
                write_run(&app_dir, &run.config, &stats, &snap.population, &run.evaluator, snap.generation)
            })
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
            Some(dir)
        }
        _ => None,
    };
    Ok(Json(json!({ "run_id": id, "persisted": persisted })))
}

#[derive(Debug, Deserialize)]
struct GenerationQuery {
    generation: Option<String>,
    format: Option<String>,
}

fn snapshot(run: &RunEntry, generation: Option<&str>) -> ApiResult<GenerationSnapshot> {
    let shared = run.shared();
    let latest = shared
        .snapshots
        .latest()
        .ok_or_else(|| ApiError::not_found("no generation completed yet"))?;
    match generation {
        None | Some("latest") => Ok(latest.clone()),
        Some(g) => {
            let g: usize = g
                .parse()
                .map_err(|_| ApiError::bad_request(format!("generation must be a number or `latest`, got {g:?}")))?;
            if g > latest.generation {
                return Err(ApiError::not_found(format!(
                    "generation {g} not reached (latest is {})",
                    latest.generation
                )));
            }
            shared
                .snapshots
                .get(g)
                .cloned()
                .ok_or_else(|| ApiError::not_found(format!("generation {g} is no longer retained")))
        }
    }
}

#[derive(Debug, Serialize)]
struct StencilSummary {
    rank: usize,
    fitness: Option<f64>,
    element_count: usize,
    document: String,
}

async fn get_population(
    State(app): AppState,
    Path(id): Path<String>,
    Query(q): Query<GenerationQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let run = app.run(&id)?;
    let snap = snapshot(&run, q.generation.as_deref())?;
    let stencils: Vec<StencilSummary> = snap
        .population
        .iter()
        .enumerate()
        .map(|(rank, s)| StencilSummary {
            rank,
            fitness: s.fitness,
            element_count: s.len(),
            document: format!("/runs/{id}/stencils/{rank}?generation={}", snap.generation),
        })
        .collect();
    Ok(Json(json!({
        "run_id": id,
        "generation": snap.generation,
        "retained_generations": run.shared().snapshots.generations(),
        "stencils": stencils,
    })))
}

fn ranked(snap: &GenerationSnapshot, rank: usize) -> ApiResult<&Stencil> {
    snap.population
        .get(rank)
        .ok_or_else(|| ApiError::not_found(format!("rank {rank} out of range for {}", snap.population.len())))
}

fn document_at(run: &RunEntry, generation: Option<&str>, rank: usize) -> ApiResult<StencilDocument> {
    let snap = snapshot(run, generation)?;
    let stencil = ranked(&snap, rank)?;
    Ok(population_document(stencil, &run.evaluator, &run.config, snap.generation))
}

async fn get_stencil(
    State(app): AppState,
    Path((id, rank)): Path<(String, usize)>,
    Query(q): Query<GenerationQuery>,
) -> ApiResult<Json<StencilDocument>> {
    let run = app.run(&id)?;
    Ok(Json(document_at(&run, q.generation.as_deref(), rank)?))
}

async fn get_stencil_svg(
    State(app): AppState,
    Path((id, rank)): Path<(String, usize)>,
    Query(q): Query<GenerationQuery>,
) -> ApiResult<Response> {
    let run = app.run(&id)?;
    Ok(svg_response(export_svg_stencil(&document_at(&run, q.generation.as_deref(), rank)?)))
}

#[derive(Debug, Serialize)]
struct Alternative {
    index: usize,
    score: f64,
    mask: String,
    media_type: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    svg: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    png_base64: Option<String>,
}

fn single_char(s: &str) -> ApiResult<char> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(ApiError::not_found(format!("{s:?} is not a single character"))),
    }
}

async fn get_alternatives(
    State(app): AppState,
    Path((id, rank, ch)): Path<(String, usize, String)>,
    Query(q): Query<GenerationQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let run = app.run(&id)?;
    let ch = single_char(&ch)?;
    if !run.evaluator.targets().contains(ch) {
        return Err(ApiError::not_found(format!("character {ch:?} is not in the target set")));
    }
    let png = match q.format.as_deref() {
        None | Some("svg") => false,
        Some("png") => true,
        Some(other) => return Err(ApiError::bad_request(format!("unknown format {other:?}"))),
    };
    let snap = snapshot(&run, q.generation.as_deref())?;
    let mut stencil = ranked(&snap, rank)?.clone();
    run.evaluator.solve_missing(&mut stencil);
    let doc = population_document(&stencil, &run.evaluator, &run.config, snap.generation);
    let solution = stencil.solution(ch)?;
    let alternatives = solution
        .alternatives
        .iter()
        .enumerate()
        .map(|(index, (mask, score))| {
            let (svg, png_base64) = if png {
                let canvas = render(&stencil, mask, &run.config.render)?;
                (None, Some(base64::engine::general_purpose::STANDARD.encode(encode_png(&canvas)?)))
            } else {
                (Some(export_svg_mask(&doc, mask)?), None)
            };
            Ok(Alternative {
                index,
                score: *score,
                mask: mask.to_bitstring(),
                media_type: if png { "image/png" } else { "image/svg+xml" },
                svg,
                png_base64,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(Json(json!({
        "run_id": id,
        "generation": snap.generation,
        "rank": rank,
        "character": ch.to_string(),
        "alternatives": alternatives,
    })))
}

async fn get_stats(
    State(app): AppState,
    Path(id): Path<String>,
    Query(q): Query<GenerationQuery>,
) -> ApiResult<Response> {
    let run = app.run(&id)?;
    let stats = run.shared().stats.clone();
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(stats).into_response()),
        Some("csv") => Ok(([(header::CONTENT_TYPE, "text/csv")], stats.to_csv()).into_response()),
        Some(other) => Err(ApiError::bad_request(format!("unknown format {other:?}"))),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecimenRequest {
    #[serde(default)]
    document: Option<StencilDocument>,
    #[serde(default)]
    run_id: Option<String>,
    #[serde(default)]
    rank: usize,
    #[serde(default)]
    generation: Option<String>,
    #[serde(default)]
    text: String,
    #[serde(default)]
    shapes: Option<String>,
    #[serde(default)]
    mapping: Option<ShapeMapping>,
    #[serde(default)]
    tracking: Option<f64>,
}

async fn post_specimen(State(app): AppState, body: Bytes) -> ApiResult<Response> {
    let request: SpecimenRequest = parse_body(&body)?;
    let doc = match (request.document, &request.run_id) {
        (Some(doc), None) => {
            doc.to_stencil()?;
            doc
        }
        (None, Some(id)) => {
            let run = app.run(id).map_err(|e| ApiError::bad_request(e.message))?;
            document_at(&run, request.generation.as_deref(), request.rank)
                .map_err(|e| ApiError::bad_request(e.message))?
        }
        _ => return Err(ApiError::bad_request("give exactly one of `document` or `run_id`")),
    };
    let library = match (&request.shapes, &request.mapping) {
        (Some(name), _) => Some(app.library(name)?),
        (None, Some(_)) => Some(app.library(BUILTIN)?),
        (None, None) => None,
    };
    let shapes = match (library, &request.mapping) {
        (Some(lib), Some(mapping)) => Some((lib, mapping)),
        (Some(_), None) => return Err(ApiError::bad_request("`shapes` needs a `mapping`")),
        _ => None,
    };
    let svg = render_specimen(&doc, &request.text, shapes, request.tracking.unwrap_or(DEFAULT_TRACKING))?;
    Ok(svg_response(svg))
}

async fn list_shapes(State(app): AppState) -> Json<serde_json::Value> {
    let libs: Vec<_> = app
        .libraries
        .iter()
        .map(|(name, lib)| json!({ "name": name, "assets": lib.assets }))
        .collect();
    Json(json!(libs))
}

async fn get_shapes(
    State(app): AppState,
    Path(name): Path<String>,
    Query(q): Query<GenerationQuery>,
) -> ApiResult<Response> {
    let lib = app
        .libraries
        .get(&name)
        .ok_or_else(|| ApiError::not_found(format!("no shape library {name:?}")))?;
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(lib).into_response()),
        Some("text") => Ok(([(header::CONTENT_TYPE, "text/plain")], lib.to_text()).into_response()),
        Some(other) => Err(ApiError::bad_request(format!("unknown format {other:?}"))),
    }
}

async fn list_targets(State(app): AppState) -> Json<Vec<String>> {
    Json(app.target_names())
}

async fn openapi() -> Response {
    ([(header::CONTENT_TYPE, "application/yaml")], OPENAPI).into_response()
}

pub fn router(app: Arc<App>) -> Router {
    Router::new()
        .route("/openapi.yaml", get(openapi))
        .route("/targets", get(list_targets))
        .route("/shapes", get(list_shapes))
        .route("/shapes/{name}", get(get_shapes))
        .route("/runs", post(create_run).get(list_runs))
        .route("/runs/{id}", get(get_run).delete(delete_run))
        .route("/runs/{id}/pause", post(pause_run))
        .route("/runs/{id}/resume", post(resume_run))
        .route("/runs/{id}/stats", get(get_stats))
        .route("/runs/{id}/population", get(get_population))
        .route("/runs/{id}/stencils/{rank}", get(get_stencil))
        .route("/runs/{id}/stencils/{rank}/svg", get(get_stencil_svg))
        .route("/runs/{id}/stencils/{rank}/glyphs/{ch}/alternatives", get(get_alternatives))
        .route("/render/specimen", post(post_specimen))
        .with_state(app)
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> crate::Result<()> {
    let app = Arc::new(App::new(config)?);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(FsPath::new(&addr.to_string()), e))?;
    let local = listener.local_addr().map_err(|e| Error::io(FsPath::new(&addr.to_string()), e))?;
    eprintln!("listening on http://{local}");
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(FsPath::new(&addr.to_string()), e))
}
