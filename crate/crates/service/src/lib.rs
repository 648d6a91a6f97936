//! HTTP session service.
//!
//! A client uploads a map, advances it one stage at a time, answers
//! whatever the engine asks, and downloads the artifacts. State lives in
//! a directory per session so a restarted server picks up where it was.

pub mod error;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use valuetree_core::compare::{compare_trees, DEFAULT_THRESHOLD};
use valuetree_core::io::artifacts::{dot_file, map_file, parse_stage, trace_file};
use valuetree_core::io::{to_canonical_json, AnyMap, MapDocument, MappingFile};
use valuetree_core::pipeline::StageName;

pub use error::ApiError;
pub use store::{SessionRecord, SessionStage, SessionStore};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    document: Value,
    #[serde(default)]
    mapping: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerBody {
    request_id: String,
    answer: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareBody {
    left: Value,
    right: Value,
    #[serde(default)]
    threshold: Option<f64>,
}

#[derive(Deserialize)]
struct ArtifactQuery {
    #[serde(default)]
    format: Option<String>,
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(t)| t).map_err(|r| {
        let status = r.status();
        let code = if status == StatusCode::UNSUPPORTED_MEDIA_TYPE {
            "unsupported_media_type"
        } else {
            "malformed_body"
        };
        ApiError::new(status, code, r.body_text())
    })
}

fn parse_document(value: &Value) -> Result<MapDocument, ApiError> {
    Ok(MapDocument::parse(&value.to_string())?)
}

/// Canonical JSON text served as-is, so bytes match what is stored.
fn json_text(status: StatusCode, text: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], text).into_response()
}

fn record_response(status: StatusCode, record: &SessionRecord) -> Result<Response, ApiError> {
    Ok(json_text(status, to_canonical_json(record)?))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

async fn create(
    State(store): State<SessionStore>,
    payload: Result<Json<CreateBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let b = body(payload)?;
    let document = parse_document(&b.document)?;
    let mapping = match &b.mapping {
        Some(m) => Some(MappingFile::parse(&m.to_string())?),
        None => None,
    };
    let record = blocking(move || store.create(document, mapping)).await?;
    record_response(StatusCode::CREATED, &record)
}

async fn show(
    State(store): State<SessionStore>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let record = blocking(move || store.get(&id)).await?;
    record_response(StatusCode::OK, &record)
}

async fn advance(
    State(store): State<SessionStore>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let record = blocking(move || store.advance(&id)).await?;
    record_response(StatusCode::OK, &record)
}

async fn pending(
    State(store): State<SessionStore>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let record = blocking(move || store.get(&id)).await?;
    match &record.pending {
        Some(r) => Ok(json_text(StatusCode::OK, to_canonical_json(r)?)),
        None => Err(ApiError::not_found("no pending decision")),
    }
}

async fn decide(
    State(store): State<SessionStore>,
    Path(id): Path<String>,
    payload: Result<Json<AnswerBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let b = body(payload)?;
    let record = blocking(move || store.answer(&id, &b.request_id, &b.answer)).await?;
    record_response(StatusCode::OK, &record)
}

async fn artifact(
    State(store): State<SessionStore>,
    Path((id, stage)): Path<(String, String)>,
    Query(q): Query<ArtifactQuery>,
) -> Result<Response, ApiError> {
    let stage = parse_stage(&stage)
        .ok_or_else(|| ApiError::not_found(format!("no stage {stage}; use vcm, emm or tree")))?;
    let format = q.format.as_deref().unwrap_or("json");
    let (file, content_type) = match format {
        "json" => (map_file(stage), "application/json"),
        "dot" => (dot_file(stage), "text/vnd.graphviz"),
        "trace" if stage != StageName::Vcm => (trace_file(stage), "application/json"),
        _ => {
            return Err(ApiError::bad_request(
                "unknown_format",
                format!("no {format} artifact for the {stage} stage"),
            ))
        }
    };
    let text = blocking(move || store.artifact(&id, stage, &file)).await?;
    Ok((StatusCode::OK, [(header::CONTENT_TYPE, content_type)], text).into_response())
}

async fn transcript(
    State(store): State<SessionStore>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let text = blocking(move || store.transcript(&id)).await?;
    Ok(json_text(StatusCode::OK, text))
}

fn tree_of(value: &Value, side: &str) -> Result<valuetree_core::ValueTree, ApiError> {
    match parse_document(value)?.into_any()? {
        AnyMap::Tree(t) => {
            let report = AnyMap::Tree(t.clone()).validate();
            if report.is_valid() {
                Ok(t)
            } else {
                Err(ApiError::unprocessable("invalid_document", format!("{side}: {report}"))
                    .with_details(json!(report.violations)))
            }
        }
        other => Err(ApiError::unprocessable(
            "wrong_kind",
            format!("{side} is a {:?}, not a value tree", other.kind()),
        )),
    }
}

async fn compare(payload: Result<Json<CompareBody>, JsonRejection>) -> Result<Response, ApiError> {
    let b = body(payload)?;
    let threshold = b.threshold.unwrap_or(DEFAULT_THRESHOLD);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ApiError::bad_request("bad_threshold", "threshold must lie in [0, 1]"));
    }
    let left = tree_of(&b.left, "left")?;
    let right = tree_of(&b.right, "right")?;
    let report = compare_trees(&left, &right, threshold);
    Ok(json_text(StatusCode::OK, to_canonical_json(&report)?))
}

pub fn router(store: SessionStore) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/advance", post(advance))
        .route("/sessions/{id}/pending", get(pending))
        .route("/sessions/{id}/decisions", post(decide))
        .route("/sessions/{id}/artifacts/{stage}", get(artifact))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/compare", post(compare))
        .with_state(store)
}

/// Serve until the process is stopped.
pub async fn serve(port: u16, data_root: PathBuf) -> std::io::Result<()> {
    let store = SessionStore::open(data_root)?;
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store)).await
}
