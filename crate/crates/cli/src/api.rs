//! JSON API over an immutable snapshot of pipeline artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::json;
use t2br_core::pipeline::{artifact_files, artifacts, read_sidecar, TopicsReport};
use t2br_core::queryengine::{
    field_key, parse_query, unparse, valid_fields, QueryError, QueryHit, RecipeIndex, RecordBody, RecordType,
};
use t2br_core::recipegen::{trend_matrix, RecipeSequence, TrendAxis};

/// Everything the handlers read. Built once and never mutated.
pub struct Snapshot {
    pub index: RecipeIndex,
    pub topics: Option<TopicsReport>,
    /// Artifact file name → sha256, from the provenance sidecars.
    pub artifacts: BTreeMap<String, String>,
    sequences: Vec<RecipeSequence>,
}

impl Snapshot {
    pub fn new(index: RecipeIndex, topics: Option<TopicsReport>) -> Self {
        let sequences = index
            .records
            .iter()
            .filter_map(|r| match &r.body {
                RecordBody::Sequence(s) => Some(s.clone()),
                RecordBody::EndToEnd(_) => None,
            })
            .collect();
        Snapshot { index, topics, artifacts: BTreeMap::new(), sequences }
    }

    /// Loads `index.json` (required) and `topics.json` (optional) from an
    /// artifact directory.
    pub fn load(dir: &Path) -> t2br_core::error::Result<Self> {
        let index = RecipeIndex::load(&dir.join(artifacts::INDEX))?;
        let topics_path = dir.join(artifacts::TOPICS);
        let topics = if topics_path.is_file() { Some(TopicsReport::load(&topics_path)?) } else { None };
        let mut snap = Snapshot::new(index, topics);
        for f in artifact_files(dir)? {
            if let Ok(prov) = read_sidecar(&f) {
                snap.artifacts.insert(prov.artifact, prov.sha256);
            }
        }
        Ok(snap)
    }
}

#[derive(Clone)]
struct AppState {
    snap: Arc<Snapshot>,
    token: Option<Arc<str>>,
}

/// Error body: `{status, code, message}` plus `offset` for query errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(serialize_with = "status_code")]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

fn status_code<S: serde::Serializer>(s: &StatusCode, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_u16(s.as_u16())
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, code: code.into(), message: message.into(), offset: None }
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("{what} not found"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let kind = serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: format!("query_{kind}"),
            message: e.to_string(),
            offset: Some(e.offset),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(self.status, &self)
    }
}

/// Serializes through `serde_json::Value`, whose maps are ordered, so every
/// body has sorted keys and identical requests give identical bytes.
fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    let bytes = serde_json::to_value(body).and_then(|v| serde_json::to_vec(&v));
    match bytes {
        Ok(b) => {
            let mut r = (status, b).into_response();
            r.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
            r
        }
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

fn ok<T: Serialize>(body: &T) -> Response {
    json_response(StatusCode::OK, body)
}

#[derive(Debug, Deserialize)]
struct QueryRequest {
    q: String,
    #[serde(default)]
    offset: usize,
    limit: Option<usize>,
}

#[derive(Debug, Serialize)]
struct QueryResponse {
    query: String,
    /// Canonical form of the parsed query; re-parses to the same clauses.
    canonical: String,
    total: usize,
    offset: usize,
    results: Vec<QueryHit>,
}

async fn query(State(st): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: QueryRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", format!("expected {{\"q\": string}}: {e}")))?;
    let ast = parse_query(&req.q)?;
    let res = st.snap.index.execute(&ast);
    let limit = req.limit.unwrap_or(usize::MAX);
    let results = res.results.into_iter().skip(req.offset).take(limit).collect();
    Ok(ok(&QueryResponse { query: res.query, canonical: unparse(&ast), total: res.total, offset: req.offset, results }))
}

async fn recipe(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let rec = st.snap.index.get(&id).ok_or_else(|| ApiError::not_found(&format!("recipe `{id}`")))?;
    Ok(ok(&rec.body))
}

#[derive(Debug, Deserialize)]
struct TrendParams {
    row: Option<String>,
    col: Option<String>,
}

async fn trends(State(st): State<AppState>, Query(p): Query<TrendParams>) -> Result<Response, ApiError> {
    let axis = |name: &str, v: Option<String>| -> Result<TrendAxis, ApiError> {
        let v = v.ok_or_else(|| {
            ApiError::new(StatusCode::BAD_REQUEST, "missing_parameter", format!("query parameter `{name}` is required"))
        })?;
        TrendAxis::for_category(&v).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "unknown_category", e.to_string()))
    };
    let (row, col) = (axis("row", p.row)?, axis("col", p.col)?);
    let m = trend_matrix(&st.snap.sequences, row, col).map_err(ApiError::internal)?;
    Ok(ok(&m))
}

async fn topics(State(st): State<AppState>) -> Result<Response, ApiError> {
    let t = st.snap.topics.as_ref().ok_or_else(|| ApiError::not_found("topic report"))?;
    Ok(ok(t))
}

#[derive(Debug, Serialize)]
struct FieldInfo {
    field: String,
    /// Posting key the field reads; METHOD reads METH.
    key: String,
    values: Vec<String>,
}

async fn fields(State(st): State<AppState>) -> Response {
    let vocab = st.snap.index.vocabulary();
    let fields: Vec<FieldInfo> = valid_fields()
        .into_iter()
        .map(|f| FieldInfo {
            field: f.to_string(),
            key: field_key(f).to_string(),
            values: vocab.get(field_key(f)).cloned().unwrap_or_default(),
        })
        .collect();
    ok(&json!({ "fields": fields }))
}

async fn stats(State(st): State<AppState>) -> Response {
    let idx = &st.snap.index;
    let by_type: BTreeMap<&str, usize> = RecordType::ALL
        .iter()
        .map(|t| (t.as_str(), idx.types.get(t).map_or(0, Vec::len)))
        .collect();
    let papers: BTreeSet<&str> = idx.records.iter().map(|r| r.paper_doi.as_str()).collect();
    let with_recipes: BTreeSet<&str> = idx
        .records
        .iter()
        .filter(|r| r.record_type == RecordType::EndToEnd)
        .map(|r| r.paper_doi.as_str())
        .collect();
    let postings: usize = idx.postings.values().map(BTreeMap::len).sum();
    ok(&json!({
        "records": idx.len(),
        "by_type": by_type,
        "papers": papers.len(),
        "papers_with_recipes": with_recipes.len(),
        "postings": postings,
        "topics": st.snap.topics.as_ref().map(|t| t.k),
        "artifacts": st.snap.artifacts,
    }))
}

async fn fallback() -> ApiError {
    ApiError::not_found("route")
}

async fn require_token(State(st): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(token) = &st.token {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(&**token) {
            return ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token")
                .into_response();
        }
    }
    next.run(req).await
}

/// The API router. With `token` set, every request needs
/// `Authorization: Bearer <token>`.
pub fn router(snapshot: Arc<Snapshot>, token: Option<String>) -> Router {
    let state = AppState { snap: snapshot, token: token.map(Arc::from) };
    Router::new()
        .route("/api/query", post(query))
        .route("/api/recipes/{id}", get(recipe))
        .route("/api/trends", get(trends))
        .route("/api/topics", get(topics))
        .route("/api/fields", get(fields))
        .route("/api/stats", get(stats))
        .fallback(fallback)
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(snapshot: Snapshot, addr: &str, token: Option<String>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(snapshot), token))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
