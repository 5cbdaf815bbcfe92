//! HTTP service over in-memory sessions.
//!
//! Each session holds an ensemble, a configuration and the result of the
//! last center computation. Mutations of one session are serialized by a
//! per-session writer lock and publish a fresh immutable snapshot, so reads
//! never wait for a computation. Any mutation discards the stored result.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use lmt_core::{AgreementMode, Embedding, LabeledMergeTree, PipelineConfig, PipelineOutput};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commands::{morph, MorphMode, MorphRequest};
use crate::document::{parse_document, tree_to_value, TreeDocument};
use crate::failure::Failure;
use crate::report::{self, CenterView};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub delta: f64,
    pub lambda: f64,
    pub steps: usize,
    pub mode: String,
    pub g: f64,
    pub normalize: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        SessionConfig {
            delta: p.delta,
            lambda: p.lambda,
            steps: 10,
            mode: p.mode.as_str().to_string(),
            g: p.g,
            normalize: p.normalize,
        }
    }
}

pub const MAX_STEPS: usize = 1000;

impl SessionConfig {
    pub fn pipeline(&self) -> Result<PipelineConfig, Failure> {
        let config = PipelineConfig {
            mode: AgreementMode::parse(&self.mode)?,
            lambda: self.lambda,
            delta: self.delta,
            g: self.g,
            normalize: self.normalize,
        };
        config.check()?;
        if !self.delta.is_finite() {
            return Err(Failure::new("input", "delta must be finite"));
        }
        if self.steps < 2 || self.steps > MAX_STEPS {
            return Err(Failure::new(
                "input",
                format!("steps must lie in 2..={MAX_STEPS}, got {}", self.steps),
            ));
        }
        Ok(config)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigPatch {
    delta: Option<f64>,
    lambda: Option<f64>,
    steps: Option<usize>,
    mode: Option<String>,
    g: Option<f64>,
    normalize: Option<bool>,
}

impl ConfigPatch {
    fn apply(self, base: &SessionConfig) -> Result<SessionConfig, Failure> {
        let next = SessionConfig {
            delta: self.delta.unwrap_or(base.delta),
            lambda: self.lambda.unwrap_or(base.lambda),
            steps: self.steps.unwrap_or(base.steps),
            mode: self.mode.unwrap_or_else(|| base.mode.clone()),
            g: self.g.unwrap_or(base.g),
            normalize: self.normalize.unwrap_or(base.normalize),
        };
        next.pipeline()?;
        Ok(next)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    #[serde(default)]
    config: Option<Value>,
    #[serde(default)]
    trees: Vec<TreeDocument>,
}

struct Computed {
    output: PipelineOutput,
    config: PipelineConfig,
    /// Leaf-labeled center, laid out when the members are embedded.
    center: LabeledMergeTree,
    center_report: Value,
    consistency_report: Value,
}

#[derive(Clone)]
struct Snapshot {
    config: SessionConfig,
    members: Vec<LabeledMergeTree>,
    result: Option<Arc<Computed>>,
}

struct Session {
    writer: tokio::sync::Mutex<()>,
    snapshot: RwLock<Arc<Snapshot>>,
}

impl Session {
    fn new(snapshot: Snapshot) -> Self {
        Session {
            writer: tokio::sync::Mutex::new(()),
            snapshot: RwLock::new(Arc::new(snapshot)),
        }
    }

    fn read(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn publish(&self, next: Snapshot) {
        *self.snapshot.write().expect("snapshot lock") = Arc::new(next);
    }
}

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Session>>>>,
    store: Option<Arc<PathBuf>>,
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::io(&path.display().to_string(), e)
}

impl AppState {
    /// Empty state; with a directory, sessions found there are loaded and
    /// every change is written back.
    pub fn new(data_dir: Option<PathBuf>) -> Result<Self, Failure> {
        let mut sessions = HashMap::new();
        if let Some(dir) = &data_dir {
            std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
            let entries = std::fs::read_dir(dir).map_err(|e| io_failure(dir, e))?;
            let mut dirs: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_dir())
                .collect();
            dirs.sort();
            for d in dirs {
                let id = d.file_name().expect("entry name").to_string_lossy().to_string();
                sessions.insert(id, Arc::new(Session::new(load_session(&d)?)));
            }
        }
        Ok(AppState {
            sessions: Arc::new(RwLock::new(sessions)),
            store: data_dir.map(Arc::new),
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, Failure> {
        self.sessions
            .read()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| Failure::not_found(format!("unknown session {id:?}")))
    }

    fn persist(&self, id: &str, snap: &Snapshot) -> Result<(), Failure> {
        match &self.store {
            Some(dir) => save_session(&dir.join(id), snap),
            None => Ok(()),
        }
    }
}

fn member_file(k: usize) -> String {
    format!("member-{k:04}.json")
}

fn save_session(dir: &Path, snap: &Snapshot) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let config = dir.join("config.json");
    std::fs::write(&config, report::to_text(&json!(snap.config))).map_err(|e| io_failure(&config, e))?;
    for (k, m) in snap.members.iter().enumerate() {
        let path = dir.join(member_file(k));
        std::fs::write(&path, report::to_text(&tree_to_value(m)?)).map_err(|e| io_failure(&path, e))?;
    }
    let stale = dir.join(member_file(snap.members.len()));
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|e| io_failure(&stale, e))?;
    }
    Ok(())
}

fn load_session(dir: &Path) -> Result<Snapshot, Failure> {
    let path = dir.join("config.json");
    let config: SessionConfig = match std::fs::read(&path) {
        Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| Failure::syntax(format!("{}: {e}", path.display())))?,
        Err(_) => SessionConfig::default(),
    };
    config.pipeline()?;
    let mut members = Vec::new();
    loop {
        let path = dir.join(member_file(members.len()));
        let Ok(bytes) = std::fs::read(&path) else { break };
        members.push(parse_document(&bytes)?.to_tree()?);
    }
    Ok(Snapshot {
        config,
        members,
        result: None,
    })
}

pub struct ApiError(pub Failure);

impl From<Failure> for ApiError {
    fn from(f: Failure) -> Self {
        ApiError(f)
    }
}

impl From<lmt_core::Error> for ApiError {
    fn from(e: lmt_core::Error) -> Self {
        ApiError(e.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).expect("known status");
        (status, Json(self.0.to_json())).into_response()
    }
}

type ApiResult = Result<(StatusCode, Json<Value>), ApiError>;

fn ok(v: Value) -> ApiResult {
    Ok((StatusCode::OK, Json(v)))
}

fn session_view(id: &str, snap: &Snapshot) -> Result<Value, Failure> {
    Ok(json!({
        "id": id,
        "config": snap.config,
        "members": snap.members.len(),
        "trees": snap.members.iter().map(tree_to_value).collect::<Result<Vec<_>, _>>()?,
        "computed": snap.result.is_some(),
    }))
}

fn tree_from_body(body: &[u8]) -> Result<LabeledMergeTree, Failure> {
    parse_document(body)?.to_tree()
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, Failure> + Send + 'static,
) -> Result<T, Failure> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| Failure::new("internal", format!("computation failed: {e}")))?
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let req: NewSession = if body.iter().all(u8::is_ascii_whitespace) {
        NewSession::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| Failure::syntax(e.to_string()))?
    };
    let config = match req.config {
        None => SessionConfig::default(),
        Some(v) => serde_json::from_value::<ConfigPatch>(v)
            .map_err(|e| Failure::syntax(e.to_string()))?
            .apply(&SessionConfig::default())?,
    };
    let members = req
        .trees
        .iter()
        .map(TreeDocument::to_tree)
        .collect::<Result<Vec<_>, _>>()?;
    let snap = Snapshot {
        config,
        members,
        result: None,
    };
    let id = uuid::Uuid::new_v4().simple().to_string();
    state.persist(&id, &snap)?;
    let view = session_view(&id, &snap)?;
    state
        .sessions
        .write()
        .expect("session map")
        .insert(id, Arc::new(Session::new(snap)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let snap = state.session(&id)?.read();
    ok(session_view(&id, &snap)?)
}

async fn delete_session(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<StatusCode, ApiError> {
    let session = state
        .sessions
        .write()
        .expect("session map")
        .remove(&id)
        .ok_or_else(|| Failure::not_found(format!("unknown session {id:?}")))?;
    let _guard = session.writer.lock().await;
    if let Some(dir) = &state.store {
        let d = dir.join(&id);
        if d.exists() {
            std::fs::remove_dir_all(&d).map_err(|e| io_failure(&d, e))?;
        }
    }
    Ok(StatusCode::NO_CONTENT)
}

/// Applies `change` under the session's writer lock and clears the result.
async fn mutate(
    state: &AppState,
    id: &str,
    change: impl FnOnce(&mut Snapshot) -> Result<Value, Failure>,
) -> Result<Value, Failure> {
    let session = state.session(id)?;
    let _guard = session.writer.lock().await;
    let mut next = (*session.read()).clone();
    let out = change(&mut next)?;
    next.result = None;
    state.persist(id, &next)?;
    session.publish(next);
    Ok(out)
}

async fn add_tree(State(state): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult {
    let tree = tree_from_body(&body)?;
    let v = mutate(&state, &id, |s| {
        s.members.push(tree);
        Ok(json!({"index": s.members.len() - 1, "members": s.members.len()}))
    })
    .await?;
    Ok((StatusCode::CREATED, Json(v)))
}

fn member_index(snap: &Snapshot, k: usize) -> Result<usize, Failure> {
    if k < snap.members.len() {
        Ok(k)
    } else {
        Err(Failure::not_found(format!(
            "unknown member {k}; session has {}",
            snap.members.len()
        )))
    }
}

async fn get_tree(State(state): State<AppState>, UrlPath((id, k)): UrlPath<(String, usize)>) -> ApiResult {
    let snap = state.session(&id)?.read();
    let k = member_index(&snap, k)?;
    ok(tree_to_value(&snap.members[k])?)
}

async fn put_tree(
    State(state): State<AppState>,
    UrlPath((id, k)): UrlPath<(String, usize)>,
    body: Bytes,
) -> ApiResult {
    state.session(&id)?;
    let tree = tree_from_body(&body)?;
    ok(mutate(&state, &id, |s| {
        let k = member_index(s, k)?;
        s.members[k] = tree;
        Ok(json!({"index": k, "members": s.members.len()}))
    })
    .await?)
}

async fn put_config(State(state): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult {
    state.session(&id)?;
    let patch: ConfigPatch = serde_json::from_slice(&body).map_err(|e| Failure::syntax(e.to_string()))?;
    ok(mutate(&state, &id, |s| {
        s.config = patch.apply(&s.config)?;
        Ok(json!(s.config))
    })
    .await?)
}

fn compute(snap: &Snapshot) -> Result<Computed, Failure> {
    let config = snap.config.pipeline()?;
    let ensemble = lmt_core::Ensemble::new(snap.members.clone());
    let output = lmt_core::run_pipeline(&ensemble, &config)?;
    let mut center = output.center.center.clone();
    if let Some(e) = &output.center_embedding {
        let points: Vec<Vec<f64>> = e.points().take(center.vertex_count()).map(<[f64]>::to_vec).collect();
        center = center.with_embedding(Some(Embedding::new(e.dim(), &points)?))?;
    }
    let center_report = report::center_value(&CenterView {
        mode: config.mode,
        lambda: config.lambda,
        pivot: output.pivot,
        reports: &output.reports,
        members: &snap.members,
        center: &output.center,
        center_tree: Some(&center),
    })?;
    let consistency_report = report::consistency_value(&output, &config)?;
    Ok(Computed {
        output,
        config,
        center,
        center_report,
        consistency_report,
    })
}

async fn post_center(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let session = state.session(&id)?;
    let _guard = session.writer.lock().await;
    let snap = session.read();
    let work = snap.clone();
    let computed = blocking(move || compute(&work)).await?;
    let value = computed.center_report.clone();
    let mut next = (*snap).clone();
    next.result = Some(Arc::new(computed));
    session.publish(next);
    ok(value)
}

fn computed(snap: &Snapshot) -> Result<Arc<Computed>, Failure> {
    snap.result
        .clone()
        .ok_or_else(|| Failure::state("no center has been computed", "POST /sessions/{id}/center first"))
}

async fn get_consistency(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let c = computed(&state.session(&id)?.read())?;
    ok(c.consistency_report.clone())
}

async fn get_summary(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let c = computed(&state.session(&id)?.read())?;
    let mut v = report::summary_value(&c.output.center);
    v["pivot"] = json!(c.output.pivot);
    ok(v)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeodesicQuery {
    member: usize,
    steps: Option<usize>,
    mode: Option<String>,
}

async fn post_geodesic(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<GeodesicQuery>, QueryRejection>,
) -> ApiResult {
    let Query(q) = query.map_err(|e| Failure::syntax(e.body_text()))?;
    let snap = state.session(&id)?.read();
    let c = computed(&snap)?;
    let k = member_index(&snap, q.member)?;
    let mode = match q.mode.as_deref().unwrap_or("geodesic") {
        "geodesic" => MorphMode::Geodesic,
        "linear" => MorphMode::Linear,
        other => {
            return Err(Failure::new("input", format!("unknown mode {other:?}; expected geodesic or linear")).into())
        }
    };
    let steps = q.steps.unwrap_or(snap.config.steps);
    if steps < 2 || steps > MAX_STEPS {
        return Err(Failure::new("input", format!("steps must lie in 2..={MAX_STEPS}, got {steps}")).into());
    }
    let value = blocking(move || {
        let (source, target) = match mode {
            MorphMode::Geodesic => (c.center.clone(), c.output.ensemble.members()[k].clone()),
            MorphMode::Linear => {
                let emb = c.output.center_embedding.clone();
                (
                    c.output.completed.center.with_embedding(emb)?,
                    c.output.completed.members[k].clone(),
                )
            }
        };
        let embedded = source.embedding().is_some() && target.embedding().is_some();
        let req = MorphRequest {
            steps,
            mode,
            consistency: mode == MorphMode::Geodesic,
            delta: c.config.delta,
            lambda: if embedded { c.config.lambda } else { 1.0 },
        };
        let mut v = morph(&source, &target, &req)?;
        v["member"] = json!(k);
        Ok(v)
    })
    .await?;
    ok(value)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/trees", post(add_tree))
        .route("/sessions/{id}/trees/{k}", get(get_tree).put(put_tree))
        .route("/sessions/{id}/config", put(put_config))
        .route("/sessions/{id}/center", post(post_center))
        .route("/sessions/{id}/consistency", get(get_consistency))
        .route("/sessions/{id}/geodesic", post(post_geodesic))
        .route("/sessions/{id}/summary", get(get_summary))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, data_dir: Option<PathBuf>) -> Result<(), Failure> {
    let app = router(AppState::new(data_dir)?);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Failure::io(&addr.to_string(), e))?;
    eprintln!("listening on http://{}", listener.local_addr().map_err(|e| Failure::io("socket", e))?);
    axum::serve(listener, app)
        .await
        .map_err(|e| Failure::io("server", e))
}
