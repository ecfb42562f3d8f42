//! HTTP/JSON rake-link audit service.
//!
//! Datasets and sweeps are content-addressed: the hash of the canonical
//! inputs is the identifier, so repeated uploads and sweep requests are
//! idempotent. Everything lives under the data directory:
//!
//! ```text
//! <data>/datasets/<dataset_id>/{timetable.csv, topology.csv}
//! <data>/sweeps/<sweep_id>/{run.json, job.json, manifest.jsonl, solutions/}
//! ```
//!
//! Unfinished sweeps found at startup are resumed.
//!
//! There is no authentication. Run it only on a trusted network.

use std::collections::HashMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use tokio::sync::Semaphore;

use crate::io::{read_timetable, read_topology, write_timetable, write_topology, IoError};
use crate::model::{Bounds, ModelError, Timetable, Topology};
use crate::objectives::{density_profile, evaluate, peak_density, ObjectiveVector};
use crate::pareto::{find_clusters, front_minima, sort_fronts, FrontAssignment};
use crate::pathcover::min_fleet;
use crate::sweep::{
    generate_grid, load_manifest, load_run_info, run_id, run_sweep_to_dir, BoundsGrid,
    RecordFilter, SweepManifest, MANIFEST_FILE,
};

const JOB_FILE: &str = "job.json";
const FAILED_FILE: &str = "failed.json";

#[derive(Debug, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    fields: Vec<FieldError>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            fields: Vec::new(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }

    fn field(field: &str, message: impl Into<String>) -> Self {
        let message = message.into();
        ApiError {
            status: StatusCode::BAD_REQUEST,
            fields: vec![FieldError {
                field: field.to_owned(),
                message: message.clone(),
            }],
            message,
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, format!("unknown {what} `{id}`"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.message, "fields": self.fields });
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        let status = match r {
            JsonRejection::MissingJsonContentType(_) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, r.body_text())
    }
}

fn bounds_error(e: ModelError) -> ApiError {
    match e {
        ModelError::InadmissibleBounds { .. } => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
        }
        ModelError::InvalidBound { name, .. } => ApiError::field(&format!("bounds.{name}"), e.to_string()),
        other => ApiError::bad_request(other.to_string()),
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Dataset {
    timetable: Timetable,
    topology: Topology,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum JobStatus {
    Pending,
    Running { done: usize, total: usize },
    Done { total: usize },
    Failed { error: String },
}

struct Job {
    done: AtomicUsize,
    total: usize,
    state: Mutex<JobPhase>,
}

#[derive(Clone)]
enum JobPhase {
    Pending,
    Running,
    Done,
    Failed(String),
}

impl Job {
    fn status(&self) -> JobStatus {
        match &*self.state.lock().expect("job lock") {
            JobPhase::Pending => JobStatus::Pending,
            JobPhase::Running => JobStatus::Running {
                done: self.done.load(Ordering::SeqCst),
                total: self.total,
            },
            JobPhase::Done => JobStatus::Done { total: self.total },
            JobPhase::Failed(e) => JobStatus::Failed { error: e.clone() },
        }
    }

    fn set(&self, phase: JobPhase) {
        *self.state.lock().expect("job lock") = phase;
    }
}

#[derive(Serialize, Deserialize)]
struct JobFile {
    dataset_id: String,
}

/// Shared service state. The registries are the only mutable state.
pub struct AppState {
    data_dir: PathBuf,
    datasets: Mutex<HashMap<String, Arc<Dataset>>>,
    jobs: Mutex<HashMap<String, Arc<Job>>>,
    manifests: Mutex<HashMap<String, Arc<SweepManifest>>>,
    sweep_slots: Arc<Semaphore>,
    threads_per_sweep: usize,
}

pub struct ServerConfig {
    pub data_dir: PathBuf,
    /// Sweeps running at once; further sweeps wait as `pending`.
    pub concurrent_sweeps: usize,
    /// Solver threads per sweep; 0 uses all cores.
    pub threads_per_sweep: usize,
}

impl ServerConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServerConfig {
            data_dir: data_dir.into(),
            concurrent_sweeps: 1,
            threads_per_sweep: 0,
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn dataset_id(tt: &Timetable, topo: &Topology) -> String {
    let doc = json!({ "timetable": tt, "topology": topo });
    sha256_hex(&serde_json::to_vec(&doc).expect("dataset serializes"))
}

impl AppState {
    /// Opens the data directory. Call [`AppState::resume_sweeps`] from
    /// within a Tokio runtime to restart unfinished sweeps.
    pub fn open(cfg: ServerConfig) -> std::io::Result<Arc<AppState>> {
        fs::create_dir_all(cfg.data_dir.join("datasets"))?;
        fs::create_dir_all(cfg.data_dir.join("sweeps"))?;
        Ok(Arc::new(AppState {
            data_dir: cfg.data_dir,
            datasets: Mutex::new(HashMap::new()),
            jobs: Mutex::new(HashMap::new()),
            manifests: Mutex::new(HashMap::new()),
            sweep_slots: Arc::new(Semaphore::new(cfg.concurrent_sweeps.max(1))),
            threads_per_sweep: cfg.threads_per_sweep,
        }))
    }

    fn dataset_dir(&self, id: &str) -> PathBuf {
        self.data_dir.join("datasets").join(id)
    }

    fn sweeps_root(&self) -> PathBuf {
        self.data_dir.join("sweeps")
    }

    fn dataset(&self, id: &str) -> ApiResult<Arc<Dataset>> {
        if let Some(ds) = self.datasets.lock().expect("dataset lock").get(id) {
            return Ok(ds.clone());
        }
        // Identifiers are hex digests; anything else cannot name a directory.
        if id.is_empty() || !id.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(ApiError::not_found("dataset", id));
        }
        let dir = self.dataset_dir(id);
        let load = || -> Result<Dataset, IoError> {
            let timetable = read_timetable(fs::File::open(dir.join("timetable.csv"))?)?;
            let topology = read_topology(fs::File::open(dir.join("topology.csv"))?, &timetable)?;
            Ok(Dataset {
                timetable,
                topology,
            })
        };
        let ds = Arc::new(load().map_err(|_| ApiError::not_found("dataset", id))?);
        self.datasets
            .lock()
            .expect("dataset lock")
            .insert(id.to_owned(), ds.clone());
        Ok(ds)
    }

    fn job(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs.lock().expect("job lock").get(id).cloned()
    }

    /// Restarts every sweep directory whose manifest is incomplete.
    pub fn resume_sweeps(self: &Arc<Self>) -> std::io::Result<usize> {
        let mut resumed = 0;
        for entry in fs::read_dir(self.sweeps_root())? {
            let dir = entry?.path();
            let Some(sweep_id) = dir.file_name().and_then(|n| n.to_str()).map(str::to_owned) else {
                continue;
            };
            let (Ok(info), Ok(job)) = (
                load_run_info(&dir),
                fs::read(dir.join(JOB_FILE))
                    .map_err(|e| e.to_string())
                    .and_then(|b| serde_json::from_slice::<JobFile>(&b).map_err(|e| e.to_string())),
            ) else {
                continue;
            };
            if dir.join(FAILED_FILE).exists() {
                continue;
            }
            let Ok(ds) = self.dataset(&job.dataset_id) else {
                continue;
            };
            let done = count_lines(&dir.join(MANIFEST_FILE));
            if done >= info.total {
                continue;
            }
            log::info!("resuming sweep {sweep_id} at {done}/{}", info.total);
            self.start_sweep(sweep_id, ds, info.grid, info.total);
            resumed += 1;
        }
        Ok(resumed)
    }

    fn start_sweep(self: &Arc<Self>, sweep_id: String, ds: Arc<Dataset>, grid: BoundsGrid, total: usize) {
        let job = Arc::new(Job {
            done: AtomicUsize::new(0),
            total,
            state: Mutex::new(JobPhase::Pending),
        });
        self.jobs
            .lock()
            .expect("job lock")
            .insert(sweep_id.clone(), job.clone());
        let state = self.clone();
        tokio::spawn(async move {
            let _permit = state.sweep_slots.clone().acquire_owned().await;
            job.set(JobPhase::Running);
            let worker_job = job.clone();
            let root = state.sweeps_root();
            let threads = state.threads_per_sweep;
            let result = tokio::task::spawn_blocking(move || {
                run_sweep_to_dir(&ds.timetable, &ds.topology, &grid, threads, &root, &|done, _| {
                    worker_job.done.fetch_max(done, Ordering::SeqCst);
                })
            })
            .await;
            match result {
                Ok(Ok(_)) => job.set(JobPhase::Done),
                Ok(Err(e)) => fail_job(&state, &sweep_id, &job, e.to_string()),
                Err(e) => fail_job(&state, &sweep_id, &job, e.to_string()),
            }
        });
    }

    fn manifest(&self, sweep_id: &str) -> ApiResult<Arc<SweepManifest>> {
        if let Some(m) = self.manifests.lock().expect("manifest lock").get(sweep_id) {
            return Ok(m.clone());
        }
        match self.sweep_status(sweep_id)? {
            JobStatus::Done { .. } => {}
            other => {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    format!("sweep `{sweep_id}` is not finished ({})", status_name(&other)),
                ))
            }
        }
        let m = Arc::new(
            load_manifest(&self.sweeps_root().join(sweep_id)).map_err(ApiError::internal)?,
        );
        self.manifests
            .lock()
            .expect("manifest lock")
            .insert(sweep_id.to_owned(), m.clone());
        Ok(m)
    }

    fn sweep_status(&self, sweep_id: &str) -> ApiResult<JobStatus> {
        if let Some(job) = self.job(sweep_id) {
            return Ok(job.status());
        }
        if sweep_id.is_empty() || !sweep_id.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(ApiError::not_found("sweep", sweep_id));
        }
        let dir = self.sweeps_root().join(sweep_id);
        let info = load_run_info(&dir).map_err(|_| ApiError::not_found("sweep", sweep_id))?;
        if let Ok(bytes) = fs::read(dir.join(FAILED_FILE)) {
            let error = serde_json::from_slice::<serde_json::Value>(&bytes)
                .ok()
                .and_then(|v| v["error"].as_str().map(str::to_owned))
                .unwrap_or_default();
            return Ok(JobStatus::Failed { error });
        }
        let done = count_lines(&dir.join(MANIFEST_FILE));
        Ok(if done >= info.total {
            JobStatus::Done { total: info.total }
        } else {
            JobStatus::Running {
                done,
                total: info.total,
            }
        })
    }
}

fn fail_job(state: &AppState, sweep_id: &str, job: &Job, error: String) {
    log::error!("sweep {sweep_id} failed: {error}");
    let _ = fs::write(
        state.sweeps_root().join(sweep_id).join(FAILED_FILE),
        json!({ "error": error }).to_string(),
    );
    job.set(JobPhase::Failed(error));
}

fn status_name(s: &JobStatus) -> &'static str {
    match s {
        JobStatus::Pending => "pending",
        JobStatus::Running { .. } => "running",
        JobStatus::Done { .. } => "done",
        JobStatus::Failed { .. } => "failed",
    }
}

fn count_lines(path: &Path) -> usize {
    fs::read(path).map_or(0, |b| b.iter().filter(|&&c| c == b'\n').count())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", post(upload_dataset))
        .route("/datasets/{id}", get(dataset_summary))
        .route("/datasets/{id}/audit", post(audit))
        .route("/datasets/{id}/density", get(density))
        .route("/datasets/{id}/sweeps", post(create_sweep))
        .route("/sweeps/{id}", get(sweep_status))
        .route("/sweeps/{id}/records", get(sweep_records))
        .route("/sweeps/{id}/fronts", get(sweep_fronts))
        .route("/sweeps/{id}/fronts/{k}/minima", get(front_minima_route))
        .route("/sweeps/{id}/clusters", get(sweep_clusters))
        .layer(DefaultBodyLimit::max(64 * 1024 * 1024))
        .with_state(state)
}

/// Binds and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, cfg: ServerConfig) -> std::io::Result<()> {
    let state = AppState::open(cfg)?;
    let resumed = state.resume_sweeps()?;
    if resumed > 0 {
        log::info!("resumed {resumed} sweep(s)");
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn upload_dataset(
    State(state): State<Arc<AppState>>,
    mut multipart: Multipart,
) -> ApiResult<Response> {
    let (mut tt_csv, mut topo_csv) = (None, None);
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(e.body_text()))?
    {
        let name = field.name().unwrap_or_default().to_owned();
        let bytes = field
            .bytes()
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        match name.as_str() {
            "timetable" => tt_csv = Some(bytes),
            "topology" => topo_csv = Some(bytes),
            other => return Err(ApiError::field(other, "unexpected multipart field")),
        }
    }
    let tt_csv = tt_csv.ok_or_else(|| ApiError::field("timetable", "missing timetable CSV"))?;
    let topo_csv = topo_csv.ok_or_else(|| ApiError::field("topology", "missing topology CSV"))?;
    let tt = read_timetable(tt_csv.as_ref()).map_err(|e| ApiError::field("timetable", e.to_string()))?;
    let topo = read_topology(topo_csv.as_ref(), &tt)
        .map_err(|e| ApiError::field("topology", e.to_string()))?;

    let id = dataset_id(&tt, &topo);
    let dir = state.dataset_dir(&id);
    if dir.join("topology.csv").exists() {
        return Ok((StatusCode::CONFLICT, Json(json!({ "dataset_id": id }))).into_response());
    }
    let write = || -> Result<(), IoError> {
        let tmp = state.data_dir.join("datasets").join(format!(".{id}.tmp"));
        fs::create_dir_all(&tmp)?;
        write_timetable(&tt, fs::File::create(tmp.join("timetable.csv"))?)?;
        write_topology(&topo, fs::File::create(tmp.join("topology.csv"))?)?;
        fs::rename(&tmp, &dir)?;
        Ok(())
    };
    if let Err(e) = write() {
        // Lost a race with an identical upload.
        if dir.join("topology.csv").exists() {
            return Ok((StatusCode::CONFLICT, Json(json!({ "dataset_id": id }))).into_response());
        }
        return Err(ApiError::internal(e));
    }
    state.datasets.lock().expect("dataset lock").insert(
        id.clone(),
        Arc::new(Dataset {
            timetable: tt,
            topology: topo,
        }),
    );
    Ok((StatusCode::CREATED, Json(json!({ "dataset_id": id }))).into_response())
}

async fn dataset_summary(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let ds = state.dataset(&id)?;
    Ok(Json(json!({
        "dataset_id": id,
        "services": ds.timetable.len(),
        "stations": ds.topology.stations().len(),
        "peak_density": peak_density(&density_profile(&ds.timetable)),
    })))
}

#[derive(Debug, Deserialize)]
pub struct AuditRequest {
    #[serde(default)]
    pub dataset_id: Option<String>,
    pub bounds: Bounds,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AuditResponse {
    pub fleet_size: usize,
    pub objectives: ObjectiveVector,
    pub links: Vec<Vec<String>>,
    pub peak_density: u32,
    pub solve_millis: f64,
}

async fn audit(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<AuditRequest>, JsonRejection>,
) -> ApiResult<Json<AuditResponse>> {
    let ds = state.dataset(&id)?;
    let Json(req) = body?;
    if req.dataset_id.as_deref().is_some_and(|d| d != id) {
        return Err(ApiError::field("dataset_id", "does not match the URL"));
    }
    req.bounds.validate().map_err(bounds_error)?;
    let bounds = req.bounds;
    tokio::task::spawn_blocking(move || {
        let started = Instant::now();
        let cover = min_fleet(&ds.timetable, &ds.topology, &bounds).map_err(ApiError::internal)?;
        let objectives = evaluate(&cover, &ds.timetable, &ds.topology).map_err(ApiError::internal)?;
        let solve_millis = started.elapsed().as_secs_f64() * 1000.0;
        Ok(Json(AuditResponse {
            fleet_size: cover.fleet_size(),
            objectives,
            links: cover.link_ids(&ds.timetable),
            peak_density: peak_density(&density_profile(&ds.timetable)),
            solve_millis,
        }))
    })
    .await
    .map_err(ApiError::internal)?
}

#[derive(Deserialize)]
struct DensityQuery {
    #[serde(default)]
    encoding: Option<String>,
}

async fn density(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<DensityQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let ds = state.dataset(&id)?;
    let dp = density_profile(&ds.timetable);
    match q.encoding.as_deref() {
        None | Some("full") => Ok(Json(json!({ "peak": dp.peak(), "counts": dp.counts() }))),
        Some("rle") => Ok(Json(json!({ "peak": dp.peak(), "runs": dp.runs() }))),
        Some(other) => Err(ApiError::field("encoding", format!("`{other}` is not `full` or `rle`"))),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridSpec {
    Preset(String),
    Explicit(BoundsGrid),
}

#[derive(Deserialize)]
struct SweepRequest {
    grid: GridSpec,
}

async fn create_sweep(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<SweepRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let ds = state.dataset(&id)?;
    let Json(req) = body?;
    let grid = match req.grid {
        GridSpec::Preset(p) if p == "paper" => BoundsGrid::paper(),
        GridSpec::Preset(p) if p == "demo" => BoundsGrid::demo(),
        GridSpec::Preset(p) => {
            return Err(ApiError::field("grid", format!("unknown preset `{p}`")));
        }
        GridSpec::Explicit(g) => g,
    };
    grid.validate().map_err(|e| ApiError::field("grid", e.to_string()))?;
    let sweep_id = run_id(&ds.timetable, &ds.topology, &grid);

    if state.job(&sweep_id).is_some() || state.sweeps_root().join(&sweep_id).join(JOB_FILE).exists() {
        return Ok((StatusCode::OK, Json(json!({ "sweep_id": sweep_id }))).into_response());
    }
    let dir = state.sweeps_root().join(&sweep_id);
    fs::create_dir_all(&dir).map_err(ApiError::internal)?;
    fs::write(
        dir.join(JOB_FILE),
        serde_json::to_vec(&JobFile { dataset_id: id }).map_err(ApiError::internal)?,
    )
    .map_err(ApiError::internal)?;
    let total = generate_grid(&grid).len();
    state.start_sweep(sweep_id.clone(), ds, grid, total);
    Ok((StatusCode::ACCEPTED, Json(json!({ "sweep_id": sweep_id }))).into_response())
}

async fn sweep_status(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let status = state.sweep_status(&id)?;
    let mut body = serde_json::to_value(&status).map_err(ApiError::internal)?;
    body["sweep_id"] = json!(id);
    Ok(Json(body))
}

#[derive(Deserialize, Default)]
struct RecordQuery {
    #[serde(default)]
    filter: Option<String>,
    #[serde(default)]
    offset: Option<usize>,
    #[serde(default)]
    limit: Option<usize>,
    #[serde(default)]
    eps: Option<String>,
}

fn parse_filter(q: &RecordQuery) -> ApiResult<RecordFilter> {
    RecordFilter::parse(q.filter.as_deref().unwrap_or(""))
        .map_err(|e| ApiError::field("filter", e.to_string()))
}

/// Solved records passing the filter: manifest indices and objective points.
fn analysis_points(m: &SweepManifest, filter: &RecordFilter) -> (Vec<usize>, Vec<[f64; 5]>) {
    filter
        .apply(m)
        .into_iter()
        .filter_map(|(i, r)| r.objectives.map(|o| (i, o.to_array())))
        .unzip()
}

async fn sweep_records(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<RecordQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let m = state.manifest(&id)?;
    let filter = parse_filter(&q)?;
    let matched = filter.apply(&m);
    let offset = q.offset.unwrap_or(0);
    let limit = q.limit.unwrap_or(100).min(10_000);
    let page: Vec<serde_json::Value> = matched
        .iter()
        .skip(offset)
        .take(limit)
        .map(|(i, r)| {
            let mut v = serde_json::to_value(r).expect("record serializes");
            v["record_id"] = json!(i);
            v
        })
        .collect();
    Ok(Json(json!({
        "total": matched.len(),
        "offset": offset,
        "limit": limit,
        "records": page,
    })))
}

fn fronts_of(m: &SweepManifest, q: &RecordQuery) -> ApiResult<(Vec<usize>, Vec<[f64; 5]>, FrontAssignment)> {
    let (ids, points) = analysis_points(m, &parse_filter(q)?);
    let fa = sort_fronts(&points);
    Ok((ids, points, fa))
}

async fn sweep_fronts(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<RecordQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let m = state.manifest(&id)?;
    let (ids, _, fa) = tokio::task::spawn_blocking(move || fronts_of(&m, &q))
        .await
        .map_err(ApiError::internal)??;
    let fronts: Vec<Vec<usize>> = fa
        .fronts
        .iter()
        .map(|f| f.iter().map(|&p| ids[p]).collect())
        .collect();
    Ok(Json(json!({ "front_count": fronts.len(), "fronts": fronts })))
}

async fn front_minima_route(
    State(state): State<Arc<AppState>>,
    UrlPath((id, k)): UrlPath<(String, usize)>,
    Query(q): Query<RecordQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let m = state.manifest(&id)?;
    let (_, points, fa) = tokio::task::spawn_blocking(move || fronts_of(&m, &q))
        .await
        .map_err(ApiError::internal)??;
    if fa.front(k).is_none() {
        return Err(ApiError::not_found("front", &k.to_string()));
    }
    let row = &front_minima(&fa, &points)[k - 1];
    Ok(Json(json!({
        "front": k,
        "size": fa.fronts[k - 1].len(),
        "minima": { "f1": row[0], "f2": row[1], "f3": row[2], "f4": row[3], "f5": row[4] },
    })))
}

/// `eps` is one value for all objectives or five comma-separated values.
pub fn parse_epsilon(s: Option<&str>) -> Result<[f64; 5], String> {
    let Some(s) = s.filter(|s| !s.trim().is_empty()) else {
        return Ok([0.0; 5]);
    };
    let vals: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<_, _>>()?;
    let eps = match vals.as_slice() {
        [e] => [*e; 5],
        [a, b, c, d, e] => [*a, *b, *c, *d, *e],
        _ => return Err("expected 1 or 5 values".into()),
    };
    if eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err("tolerances must be finite and non-negative".into());
    }
    Ok(eps)
}

async fn sweep_clusters(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<RecordQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let eps = parse_epsilon(q.eps.as_deref()).map_err(|e| ApiError::field("eps", e))?;
    let m = state.manifest(&id)?;
    let body = tokio::task::spawn_blocking(move || -> ApiResult<serde_json::Value> {
        let (ids, points, fa) = fronts_of(&m, &q)?;
        let clusters = find_clusters(&fa, &points, &eps);
        let mut per_front = vec![0usize; fa.front_count() + 1];
        let out: Vec<serde_json::Value> = clusters
            .iter()
            .map(|c| {
                per_front[c.front] += 1;
                json!({
                    "front": c.front,
                    "cluster_id": per_front[c.front],
                    "members": c.members.iter().map(|&p| ids[p]).collect::<Vec<_>>(),
                    "representative": c.representative,
                })
            })
            .collect();
        Ok(json!({ "epsilon": eps, "cluster_count": out.len(), "clusters": out }))
    })
    .await
    .map_err(ApiError::internal)??;
    Ok(Json(body))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_forms() {
        assert_eq!(parse_epsilon(None), Ok([0.0; 5]));
        assert_eq!(parse_epsilon(Some("0.5")), Ok([0.5; 5]));
        assert_eq!(parse_epsilon(Some("1,2,3,4,5")), Ok([1.0, 2.0, 3.0, 4.0, 5.0]));
        assert!(parse_epsilon(Some("1,2")).is_err());
        assert!(parse_epsilon(Some("-1")).is_err());
    }
}
