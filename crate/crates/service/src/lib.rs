//! HTTP front end: query execution, schema discovery and statistics as JSON
//! under `/v1`.

pub mod json;

use std::collections::{HashMap, HashSet};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;

use pdrill_core::cache::{CacheConfig, Lz4};
use pdrill_core::query::parse;
use pdrill_core::{Engine, Error as CoreError, ExecOptions, ValueKind};
use pdrill_ingest::Store;

use crate::json::QueryResponse;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot load store: {0}")]
    Store(#[from] pdrill_ingest::IngestError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server failed: {0}")]
    Serve(std::io::Error),
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldInfo {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub nullable: bool,
    /// Exact number of distinct non-NULL values.
    pub distinct: usize,
    /// `time`, `measure` or `dimension`: how a UI would likely use it.
    pub role: &'static str,
}

/// Numeric fields with more distinct values than this are measures.
const DIMENSION_MAX_DISTINCT: usize = 1000;

fn role(kind: ValueKind, distinct: usize) -> &'static str {
    match kind {
        ValueKind::Date | ValueKind::Timestamp => "time",
        k if k.is_numeric() && distinct > DIMENSION_MAX_DISTINCT => "measure",
        _ => "dimension",
    }
}

pub struct AppState {
    pub engine: Arc<Engine>,
    schemas: Mutex<HashMap<String, Arc<Vec<FieldInfo>>>>,
}

impl AppState {
    pub fn new(engine: Arc<Engine>) -> Arc<Self> {
        Arc::new(AppState {
            engine,
            schemas: Mutex::new(HashMap::new()),
        })
    }

    fn fields(&self, table: &str) -> Result<Arc<Vec<FieldInfo>>, CoreError> {
        if let Some(f) = self.schemas.lock().unwrap().get(table) {
            return Ok(f.clone());
        }
        let t = self.engine.table(table)?;
        let mut out = Vec::with_capacity(t.schema.fields.len());
        for (i, f) in t.schema.fields.iter().enumerate() {
            let mut seen = HashSet::new();
            for shard in &t.shards {
                seen.extend(shard.columns()[i].dict.values()?.into_iter().filter(|v| !v.is_null()));
            }
            out.push(FieldInfo {
                name: f.name.clone(),
                kind: f.kind.name(),
                nullable: f.nullable,
                distinct: seen.len(),
                role: role(f.kind, seen.len()),
            });
        }
        let out = Arc::new(out);
        self.schemas.lock().unwrap().insert(table.to_string(), out.clone());
        Ok(out)
    }
}

/// A JSON error body with its status.
pub struct ApiError {
    status: StatusCode,
    message: String,
    position: Option<usize>,
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let status = match e {
            CoreError::UnknownTable(_) => StatusCode::NOT_FOUND,
            ref e if e.is_user_error() => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            position: e.position(),
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(p) = self.position {
            body["position"] = json!(p);
        }
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Deserialize)]
pub struct QueryRequest {
    pub sql: String,
    #[serde(default)]
    pub trace: bool,
}

async fn healthz() -> &'static str {
    "ok"
}

async fn tables(State(s): State<Arc<AppState>>) -> Result<Json<serde_json::Value>, ApiError> {
    let mut out = Vec::new();
    for name in s.engine.table_names() {
        let t = s.engine.table(&name)?;
        out.push(json!({
            "name": name,
            "rows": t.shards.iter().map(|s| s.num_rows()).sum::<usize>(),
            "shards": t.shards.len(),
            "chunks": t.shards.iter().map(|s| s.num_chunks()).sum::<usize>(),
        }));
    }
    Ok(Json(json!({ "tables": out })))
}

async fn schema(
    State(s): State<Arc<AppState>>,
    UrlPath(table): UrlPath<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let state = s.clone();
    let name = table.clone();
    let fields = tokio::task::spawn_blocking(move || state.fields(&name))
        .await
        .map_err(|e| CoreError::Internal(e.to_string()))??;
    Ok(Json(json!({ "table": table, "fields": *fields })))
}

async fn query(State(s): State<Arc<AppState>>, Json(req): Json<QueryRequest>) -> Result<Json<QueryResponse>, ApiError> {
    let start = Instant::now();
    let out = tokio::task::spawn_blocking(move || -> Result<QueryResponse, CoreError> {
        let q = parse(&req.sql)?;
        let r = s.engine.execute(&q)?;
        let mut resp = QueryResponse::new(&r, 0.0);
        if req.trace {
            let plan = s.engine.plan(&q)?;
            resp.trace = Some(json!({
                "canonical_sql": q.to_string(),
                "group_keys": plan.keys.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
                "aggregates": plan.aggs.len(),
                "kmv_seed": r.stats.kmv_seed,
            }));
        }
        Ok(resp)
    })
    .await
    .map_err(|e| CoreError::Internal(e.to_string()))?;
    let mut resp = out?;
    resp.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(Json(resp))
}

async fn stats(State(s): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let (queries, cumulative) = s.engine.cumulative_stats();
    Json(json!({
        "queries": queries,
        "cumulative": cumulative,
        "element_cache": s.engine.element_cache_stats(),
        "result_cache": s.engine.result_cache_stats(),
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    let v1 = Router::new()
        .route("/healthz", get(healthz))
        .route("/tables", get(tables))
        .route("/tables/{table}/schema", get(schema))
        .route("/query", post(query))
        .route("/stats", get(stats));
    Router::new()
        .nest("/v1", v1)
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// An engine over a store directory with an lz4-backed element cache.
pub fn load_engine(store: &Path, cache_bytes: usize) -> Result<Arc<Engine>, ServiceError> {
    let engine = Engine::new(ExecOptions::default())
        .with_element_cache(CacheConfig::two_q(cache_bytes).with_codec(Arc::new(Lz4)));
    Store::open(store)?.attach(&engine)?;
    Ok(Arc::new(engine))
}

pub async fn bind(addr: &str) -> Result<tokio::net::TcpListener, ServiceError> {
    tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind {
            addr: addr.to_string(),
            source,
        })
}

/// Serves until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, engine: Arc<Engine>) -> Result<(), ServiceError> {
    axum::serve(listener, router(AppState::new(engine)))
        .await
        .map_err(ServiceError::Serve)
}

/// Binds on a background runtime thread and returns the bound address.
/// Meant for tests and embedding.
pub fn spawn(engine: Arc<Engine>, addr: &str) -> Result<SocketAddr, ServiceError> {
    let std_listener = std::net::TcpListener::bind(addr).map_err(|source| ServiceError::Bind {
        addr: addr.to_string(),
        source,
    })?;
    std_listener.set_nonblocking(true).map_err(ServiceError::Serve)?;
    let local = std_listener.local_addr().map_err(ServiceError::Serve)?;
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().expect("runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener");
            let _ = serve(listener, engine).await;
        });
    });
    Ok(local)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roles() {
        assert_eq!(role(ValueKind::Timestamp, 5), "time");
        assert_eq!(role(ValueKind::I64, 5000), "measure");
        assert_eq!(role(ValueKind::I64, 12), "dimension");
        assert_eq!(role(ValueKind::Str, 50_000), "dimension");
    }

    #[test]
    fn error_status() {
        let e: ApiError = CoreError::syntax(7, "expected FROM").into();
        assert_eq!((e.status, e.position), (StatusCode::BAD_REQUEST, Some(7)));
        let e: ApiError = CoreError::Internal("boom".into()).into();
        assert_eq!(e.status, StatusCode::INTERNAL_SERVER_ERROR);
        let e: ApiError = CoreError::UnknownTable("x".into()).into();
        assert_eq!(e.status, StatusCode::NOT_FOUND);
    }
}
