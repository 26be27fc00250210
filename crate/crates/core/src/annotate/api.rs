//! HTTP + JSON interface of the annotation service, mounted under `/api/v1`.

use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::rounds::RoundSpec;
use super::rules::{derive, DimensionAnnotation, MessageType, Perspective, Person};
use super::service::{Annotator, Resolution, Submission};
use super::taxonomy::{FineCategory, Level};
use crate::error::Error;

pub type SharedAnnotator = Arc<RwLock<Annotator>>;

pub const CODER_HEADER: &str = "x-coder";

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::Validation { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::InvalidInput(_) | Error::UnknownLabel { .. } | Error::Degenerate(_) | Error::DuplicateId(_) => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "error": { "kind": self.0.kind(), "message": self.0.to_string() } });
        if let Error::Validation { field, .. } = &self.0 {
            body["error"]["field"] = json!(field);
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn read(state: &SharedAnnotator) -> std::sync::RwLockReadGuard<'_, Annotator> {
    state.read().unwrap_or_else(|p| p.into_inner())
}

fn write(state: &SharedAnnotator) -> std::sync::RwLockWriteGuard<'_, Annotator> {
    state.write().unwrap_or_else(|p| p.into_inner())
}

pub fn router(state: SharedAnnotator) -> Router {
    let api = Router::new()
        .route("/rounds", get(list_rounds).post(create_round))
        .route("/rounds/{id}/next", get(next_task))
        .route("/rounds/{id}/labels", post(submit_label))
        .route("/rounds/{id}/disagreements", get(disagreements))
        .route("/rounds/{id}/kappa", get(kappa))
        .route("/taxonomy", get(taxonomy))
        .route("/derive", post(derive_preview))
        .route("/export", get(export))
        .with_state(state);
    Router::new().nest("/api/v1", api)
}

async fn list_rounds(State(s): State<SharedAnnotator>) -> Json<serde_json::Value> {
    Json(json!({ "rounds": read(&s).rounds() }))
}

async fn create_round(State(s): State<SharedAnnotator>, Json(spec): Json<RoundSpec>) -> ApiResult<impl IntoResponse> {
    let round = write(&s).create_round(spec)?;
    Ok((StatusCode::CREATED, Json(round)))
}

#[derive(Deserialize)]
struct CoderQuery {
    coder: Option<String>,
}

fn coder_from(query: Option<String>, headers: &HeaderMap) -> ApiResult<String> {
    query
        .filter(|c| !c.is_empty())
        .or_else(|| headers.get(CODER_HEADER).and_then(|v| v.to_str().ok()).map(str::to_string))
        .ok_or_else(|| Error::Validation { field: "coder", message: "coder name required".into() }.into())
}

async fn next_task(
    State(s): State<SharedAnnotator>,
    Path(id): Path<u64>,
    Query(q): Query<CoderQuery>,
    headers: HeaderMap,
) -> ApiResult<Json<serde_json::Value>> {
    let coder = coder_from(q.coder, &headers)?;
    let task = read(&s).next_task(id, &coder)?;
    Ok(Json(json!({ "task": task })))
}

#[derive(Deserialize)]
struct LabelBody {
    #[serde(default)]
    coder: Option<String>,
    tweet_id: String,
    #[serde(default)]
    dims: Option<DimensionAnnotation>,
    #[serde(default)]
    category: Option<FineCategory>,
}

async fn submit_label(
    State(s): State<SharedAnnotator>,
    Path(id): Path<u64>,
    headers: HeaderMap,
    Json(body): Json<LabelBody>,
) -> ApiResult<impl IntoResponse> {
    let coder = coder_from(body.coder, &headers)?;
    let sub = Submission { coder, tweet_id: body.tweet_id, dims: body.dims, category: body.category };
    let outcome = write(&s).submit_label(id, sub)?;
    Ok((StatusCode::CREATED, Json(outcome)))
}

#[derive(Deserialize)]
struct LevelQuery {
    level: Option<String>,
    exclude: Option<String>,
    coders: Option<String>,
    #[serde(default)]
    include_resolved: bool,
}

fn level_of(q: &LevelQuery) -> ApiResult<Level> {
    Ok(q.level.as_deref().unwrap_or("6").parse::<Level>()?)
}

async fn disagreements(
    State(s): State<SharedAnnotator>,
    Path(id): Path<u64>,
    Query(q): Query<LevelQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let level = level_of(&q)?;
    let report = read(&s).disagreements(id, level, q.include_resolved)?;
    Ok(Json(serde_json::to_value(report).map_err(Error::from)?))
}

async fn kappa(
    State(s): State<SharedAnnotator>,
    Path(id): Path<u64>,
    Query(q): Query<LevelQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let level = level_of(&q)?;
    let pair = match q.coders.as_deref() {
        Some(c) => Some(c.split_once(',').ok_or_else(|| Error::InvalidInput("coders must be `a,b`".into()))?),
        None => None,
    };
    let exclude = q.exclude.as_deref().filter(|e| !e.is_empty());
    let k = read(&s).live_kappa(id, level, exclude, pair)?;
    Ok(Json(json!({ "level": level, "exclude": exclude, "kappa": k })))
}

#[derive(Serialize)]
struct CategoryInfo {
    id: FineCategory,
    name: &'static str,
    definition: &'static str,
    examples: &'static [&'static str],
    task1: &'static str,
    task2: &'static str,
}

async fn taxonomy() -> Json<serde_json::Value> {
    let categories: Vec<CategoryInfo> = FineCategory::ALL
        .iter()
        .map(|&c| CategoryInfo {
            id: c,
            name: c.display_name(),
            definition: c.definition(),
            examples: c.examples(),
            task1: c.task1(),
            task2: c.task2(),
        })
        .collect();
    Json(json!({
        "categories": categories,
        "levels": { "12": Level::Fine.classes(), "6": Level::Task1.classes(), "2": Level::Task2.classes() },
        "dimensions": {
            "message_type": MessageType::ALL.map(MessageType::as_str),
            "perspective": Perspective::ALL.map(Perspective::as_str),
            "person": Person::ALL.map(Person::as_str),
            "flags": ["serious", "focus_on_bereaved", "mentions_case"],
        },
    }))
}

async fn derive_preview(Json(dims): Json<DimensionAnnotation>) -> ApiResult<Json<serde_json::Value>> {
    let d = derive(&dims)?;
    Ok(Json(serde_json::to_value(d).map_err(Error::from)?))
}

#[derive(Deserialize)]
struct ExportQuery {
    resolution: Option<String>,
    rounds: Option<String>,
    format: Option<String>,
}

async fn export(State(s): State<SharedAnnotator>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let a = read(&s);
    if q.format.as_deref() == Some("csv") {
        return Ok(([(header::CONTENT_TYPE, "text/csv")], a.export_csv()).into_response());
    }
    let resolution: Resolution = q.resolution.as_deref().unwrap_or("latest").parse()?;
    let rounds: Vec<u64> = match q.rounds.as_deref() {
        Some(r) if !r.is_empty() => r
            .split(',')
            .map(|x| x.trim().parse::<u64>().map_err(|_| Error::InvalidInput(format!("bad round id `{x}`"))))
            .collect::<Result<_, _>>()?,
        _ => Vec::new(),
    };
    let set = a.export_labeled(&rounds, resolution)?;
    Ok(Json(json!({ "entries": set.entries })).into_response())
}

/// Binds and serves until the process is stopped.
pub async fn serve(state: SharedAnnotator, addr: std::net::SocketAddr) -> crate::error::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::InvalidInput(format!("cannot bind {addr}: {e}")))?;
    log::info!("annotation service listening on http://{addr}/api/v1");
    axum::serve(listener, router(state))
        .await
        .map_err(|e| Error::InvalidInput(format!("server error: {e}")))
}
