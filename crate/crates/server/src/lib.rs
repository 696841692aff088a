//! HTTP annotation assistant: search nodes, review missing/redundant edge
//! candidates with their explanations, accept or reject them, and refit the
//! embedding on demand.
//!
//! Every payload is JSON. Errors use `{code, message, details?}` with
//! status 400 (malformed request), 404 (unknown node), 409 (feedback that
//! does not match the graph), 422 (computation refused) or 503 (refit
//! running). The response shapes are described in `api-schema.json`,
//! served at `/api-schema.json`.

pub mod session;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ontolink_core::embed::snore::snore_score;
use ontolink_core::explain::explain_local;
use ontolink_core::recommend::{candidates, CandidateKind, FeedbackError};
use ontolink_core::Error;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

pub use session::{JournalRecord, ServerConfig, Session, SessionError, Snapshot};

/// The JSON schema document shared with the web client.
pub const API_SCHEMA: &str = include_str!("../api-schema.json");

const MAX_K: usize = 10_000;
const MAX_PAGE: usize = 200;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            details: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn unknown_node(iri: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_node",
            format!("unknown node IRI: {iri}"),
        )
    }

    fn busy() -> Self {
        Self::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "busy",
            "re-embedding in progress; retry later",
        )
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownNode(n) => Self::new(
                StatusCode::NOT_FOUND,
                "unknown_node",
                format!("unknown node: {n}"),
            ),
            Error::InvalidArgument(m) => Self::bad_request(m),
            other => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "unprocessable",
                other.to_string(),
            ),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Busy => Self::busy(),
            SessionError::Core(e) => e.into(),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "code": self.code, "message": self.message });
        if let Some(details) = self.details {
            body["details"] = details;
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;
type AppState = Arc<Session>;

pub fn router(session: Arc<Session>) -> Router {
    let static_dir = session.config.static_dir.clone();
    let api = Router::new()
        .route("/stats", get(stats))
        .route("/nodes", get(nodes))
        .route("/candidates", get(candidates_handler))
        .route("/explain/local", get(explain_local_handler))
        .route("/explain/global", get(explain_global_handler))
        .route("/feedback", post(feedback))
        .route("/reembed", post(reembed))
        .route("/journal", get(journal))
        .route("/api-schema.json", get(schema))
        .with_state(session);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Binds `addr` and serves until the process stops.
pub async fn serve(session: Arc<Session>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(session)).await
}

fn node_id(session: &Session, iri: &str) -> Result<u32, ApiError> {
    session
        .nodes
        .id(iri)
        .ok_or_else(|| ApiError::unknown_node(iri))
}

async fn schema() -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], API_SCHEMA)
}

async fn stats(State(session): State<AppState>) -> ApiResult {
    let snap = session.snapshot();
    let emb = &snap.embedding;
    Ok(Json(json!({
        "nodes": snap.graph.node_count(),
        "edges": snap.graph.edge_count(),
        "loaded_edges": session.base.edge_count(),
        "journal_entries": snap.journal_len,
        "stale": snap.stale,
        "reembedding": session.is_reembedding(),
        "embedding": {
            "rows": emb.node_count(),
            "features": emb.feature_count(),
            "nnz": emb.nnz(),
            "seed": emb.seed,
            "version": snap.embedding_version,
        },
    })))
}

#[derive(Deserialize)]
struct NodesQuery {
    #[serde(default)]
    q: String,
    #[serde(default)]
    offset: usize,
    limit: Option<usize>,
}

async fn nodes(
    State(session): State<AppState>,
    query: Result<Query<NodesQuery>, QueryRejection>,
) -> ApiResult {
    let Query(query) = query?;
    let limit = query.limit.unwrap_or(20).min(MAX_PAGE);
    let needle = query.q.to_lowercase();
    let snap = session.snapshot();
    let matches: Vec<u32> = if needle.is_empty() {
        Vec::new()
    } else {
        (0..session.nodes.len() as u32)
            .filter(|&id| session.nodes.name(id).to_lowercase().contains(&needle))
            .collect()
    };
    let items: Vec<Value> = matches
        .iter()
        .skip(query.offset)
        .take(limit)
        .map(|&id| json!({ "iri": session.nodes.name(id), "degree": snap.graph.degree(id) }))
        .collect();
    Ok(Json(json!({
        "query": query.q,
        "total": matches.len(),
        "offset": query.offset,
        "limit": limit,
        "items": items,
    })))
}

#[derive(Deserialize)]
struct CandidatesQuery {
    kind: Option<String>,
    k: Option<usize>,
    /// Comma-separated node IRIs.
    nodes: Option<String>,
}

async fn candidates_handler(
    State(session): State<AppState>,
    query: Result<Query<CandidatesQuery>, QueryRejection>,
) -> ApiResult {
    let Query(query) = query?;
    let kind: CandidateKind = query
        .kind
        .as_deref()
        .unwrap_or("missing")
        .parse()
        .map_err(|_| ApiError::bad_request("kind must be 'missing' or 'redundant'"))?;
    let k = query.k.unwrap_or(10);
    if k > MAX_K {
        return Err(ApiError::bad_request(format!("k must be at most {MAX_K}")));
    }
    let subset = match query.nodes.as_deref().filter(|s| !s.is_empty()) {
        None => None,
        Some(list) => Some(
            list.split(',')
                .map(|iri| node_id(&session, iri.trim()))
                .collect::<Result<Vec<u32>, _>>()?,
        ),
    };
    let snap = session.snapshot();
    let work = snap.clone();
    let lists = tokio::task::spawn_blocking(move || {
        candidates(&work.embedding, &work.graph, k, subset.as_deref())
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let list = match kind {
        CandidateKind::Missing => &lists.missing,
        CandidateKind::Redundant => &lists.redundant,
    };
    let items: Vec<Value> = list
        .iter()
        .map(|c| {
            json!({
                "u": session.nodes.name(c.u),
                "v": session.nodes.name(c.v),
                "score": c.score,
                "kind": c.kind,
            })
        })
        .collect();
    Ok(Json(json!({
        "kind": kind,
        "k": k,
        "stale": snap.stale,
        "warnings": lists.warnings,
        "candidates": items,
    })))
}

#[derive(Deserialize)]
struct PairQuery {
    u: String,
    v: String,
}

async fn explain_local_handler(
    State(session): State<AppState>,
    query: Result<Query<PairQuery>, QueryRejection>,
) -> ApiResult {
    let Query(query) = query?;
    let (u, v) = (node_id(&session, &query.u)?, node_id(&session, &query.v)?);
    let snap = session.snapshot();
    let e = explain_local(&snap.embedding, u, v);
    let names = snap.embedding.feature_names();
    let contributions: Vec<Value> = e
        .contributions
        .iter()
        .map(|c| json!({ "feature": names[c.feature as usize], "value": c.value }))
        .collect();
    Ok(Json(json!({
        "u": query.u,
        "v": query.v,
        "score": snore_score(&snap.embedding, u, v),
        "total": e.total,
        "support_union": e.support_union,
        "contributions": contributions,
        "stale": snap.stale,
    })))
}

#[derive(Deserialize)]
struct TopQuery {
    top: Option<usize>,
}

async fn explain_global_handler(
    State(session): State<AppState>,
    query: Result<Query<TopQuery>, QueryRejection>,
) -> ApiResult {
    let Query(query) = query?;
    let top = query.top.unwrap_or(10);
    let snap = session.snapshot();
    let worker = session.clone();
    let work = snap.clone();
    let global = tokio::task::spawn_blocking(move || worker.global_explanation(&work))
        .await
        .map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
        })??;
    let features: Vec<Value> = global
        .features
        .iter()
        .take(top)
        .map(|f| json!({ "feature": f.name, "beta": f.beta, "se": f.se, "t": f.t }))
        .collect();
    Ok(Json(json!({
        "top": top,
        "intercept": global.intercept,
        "ridge": global.ridge,
        "training_rows": global.training_rows,
        "features": features,
        "stale": snap.stale,
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRef {
    u: String,
    v: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackRequest {
    #[serde(default)]
    accept: Vec<EdgeRef>,
    #[serde(default)]
    reject: Vec<EdgeRef>,
}

fn resolve(session: &Session, edges: &[EdgeRef]) -> Result<Vec<(u32, u32)>, ApiError> {
    edges
        .iter()
        .map(|e| Ok((node_id(session, &e.u)?, node_id(session, &e.v)?)))
        .collect()
}

async fn feedback(
    State(session): State<AppState>,
    body: Result<Json<FeedbackRequest>, JsonRejection>,
) -> ApiResult {
    let Json(body) = body?;
    let accept = resolve(&session, &body.accept)?;
    let reject = resolve(&session, &body.reject)?;
    let result = session.feedback(&accept, &reject).await?;
    let applied: Vec<JournalRecord> = result.applied.iter().map(|e| session.record(e)).collect();
    let snap = session.snapshot();
    if !result.errors.is_empty() {
        let errors: Vec<Value> = result
            .errors
            .iter()
            .map(|e| edge_error(&session, e))
            .collect();
        return Err(ApiError {
            details: Some(json!({ "errors": errors, "applied": applied })),
            ..ApiError::new(
                StatusCode::CONFLICT,
                "feedback_conflict",
                format!(
                    "{} of {} edges did not apply",
                    result.errors.len(),
                    accept.len() + reject.len()
                ),
            )
        });
    }
    Ok(Json(json!({
        "applied": applied,
        "journal_entries": snap.journal_len,
        "stale": snap.stale,
    })))
}

fn edge_error(session: &Session, e: &FeedbackError) -> Value {
    json!({
        "action": e.action,
        "u": session.nodes.name(e.u),
        "v": session.nodes.name(e.v),
        "reason": e.reason,
    })
}

async fn reembed(State(session): State<AppState>) -> ApiResult {
    let start = Instant::now();
    // run to completion even if the client goes away
    let worker = session.clone();
    let snap = tokio::spawn(async move { worker.reembed().await })
        .await
        .map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
        })??;
    Ok(Json(json!({
        "stale": snap.stale,
        "nnz": snap.embedding.nnz(),
        "version": snap.embedding_version,
        "seconds": start.elapsed().as_secs_f64(),
    })))
}

async fn journal(State(session): State<AppState>) -> ApiResult {
    Ok(Json(json!({ "entries": session.journal().await })))
}
