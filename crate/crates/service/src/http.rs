//! HTTP+JSON API.
//!
//! Write endpoints need `Authorization: Bearer <token>`; the leaderboard,
//! registration and demo translation are public. Failures carry
//! `{"reason": <code>, "message": <text>}`.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cep_core::bitext::{export_pairs, SplitRatios, StatusFilter};
use cep_core::engine::{BatchKind, Command, ContributorId, ItemId, Outcome};
use cep_core::{Direction, DocId, LangTag, Timestamp};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::archive;
use crate::config::Config;
use crate::platform::{Platform, ServiceError};
use crate::translator::{self, ExternalTranslator, TranslateError};

pub struct AppState {
    pub platform: Platform,
    pub external: Option<ExternalTranslator>,
    pub config: Config,
}

pub type Shared = Arc<AppState>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    reason: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, reason: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            reason: reason.to_string(),
            message: message.into(),
        }
    }

    fn unauthorized() -> ApiError {
        ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or invalid bearer token")
    }

    fn invalid(reason: &str, message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, reason, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(json!({ "reason": self.reason, "message": self.message }));
        (self.status, body).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> ApiError {
        match e {
            ServiceError::Engine(e) => {
                let status = match e {
                    cep_core::Error::Invalid { .. } => StatusCode::UNPROCESSABLE_ENTITY,
                    cep_core::Error::Conflict { .. } => StatusCode::CONFLICT,
                    cep_core::Error::NotFound { .. } => StatusCode::NOT_FOUND,
                };
                ApiError::new(status, e.reason(), e.to_string())
            }
            ServiceError::Store(e) => {
                tracing::error!(error = %e, "store failure");
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store_error", "the event could not be stored")
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> ApiError {
        ApiError::invalid("invalid_body", e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/contributors", post(register))
        .route("/api/batch", get(batch))
        .route("/api/translations", post(translations))
        .route("/api/skips", post(skip))
        .route("/api/verifications", post(verification))
        .route("/api/leaderboard", get(leaderboard))
        .route("/api/profile/{id}", get(profile))
        .route("/api/translate", post(translate))
        .route("/api/export", get(export))
        .route("/api/admin/documents", post(stage_document))
        .route("/api/admin/documents/{id}/align", post(align_document))
        .route("/api/admin/state", get(admin_state))
        .with_state(state)
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

fn contributor(state: &AppState, headers: &HeaderMap) -> ApiResult<ContributorId> {
    let token = bearer(headers).ok_or_else(ApiError::unauthorized)?;
    state.platform.read().contributor_for(token).cloned().ok_or_else(ApiError::unauthorized)
}

fn is_admin(state: &AppState, headers: &HeaderMap) -> bool {
    matches!((bearer(headers), &state.config.admin_token), (Some(given), Some(expected)) if given == expected)
}

fn require_admin(state: &AppState, headers: &HeaderMap) -> ApiResult<()> {
    if is_admin(state, headers) {
        Ok(())
    } else {
        Err(ApiError::unauthorized())
    }
}

/// Runs a write on the blocking pool; appending syncs to disk.
async fn submit(state: &Shared, command: Command) -> ApiResult<Outcome> {
    let state = state.clone();
    tokio::task::spawn_blocking(move || state.platform.execute(command))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

#[derive(Deserialize)]
struct RegisterBody {
    handle: String,
}

async fn register(State(state): State<Shared>, body: Result<Json<RegisterBody>, JsonRejection>) -> ApiResult<Response> {
    let Json(body) = body?;
    let shared = state.clone();
    let (profile, token) = tokio::task::spawn_blocking(move || shared.platform.register(&body.handle, Timestamp::now()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let mut body = serde_json::to_value(&profile).expect("profile serializes");
    body["token"] = Value::String(token);
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Deserialize)]
struct BatchQuery {
    kind: Option<String>,
}

async fn batch(State(state): State<Shared>, headers: HeaderMap, Query(query): Query<BatchQuery>) -> ApiResult<Response> {
    let who = contributor(&state, &headers)?;
    let kind = match query.kind.as_deref() {
        Some("translate") => BatchKind::Translate,
        Some("verify") => BatchKind::Verify,
        Some(other) => return Err(ApiError::invalid("invalid_kind", format!("kind must be translate or verify, got {other:?}"))),
        None => return Err(ApiError::invalid("invalid_kind", "kind is required: translate or verify")),
    };
    match submit(&state, Command::RequestBatch { contributor: who, kind, at: Timestamp::now() }).await? {
        Outcome::Batch(batch) => Ok(Json(batch).into_response()),
        other => unreachable!("batch request produced {other:?}"),
    }
}

#[derive(Deserialize)]
struct TranslationBody {
    item_id: String,
    texts: Vec<String>,
}

async fn translations(
    State(state): State<Shared>,
    headers: HeaderMap,
    body: Result<Json<TranslationBody>, JsonRejection>,
) -> ApiResult<Response> {
    let who = contributor(&state, &headers)?;
    let Json(body) = body?;
    let command = Command::SubmitTranslation {
        contributor: who,
        item: ItemId(body.item_id),
        texts: body.texts,
        at: Timestamp::now(),
    };
    match submit(&state, command).await? {
        Outcome::Translations(candidates) => Ok((StatusCode::CREATED, Json(json!({ "candidates": candidates }))).into_response()),
        other => unreachable!("translation produced {other:?}"),
    }
}

#[derive(Deserialize)]
struct SkipBody {
    item_id: String,
}

async fn skip(State(state): State<Shared>, headers: HeaderMap, body: Result<Json<SkipBody>, JsonRejection>) -> ApiResult<Response> {
    let who = contributor(&state, &headers)?;
    let Json(body) = body?;
    submit(&state, Command::SkipItem { contributor: who, item: ItemId(body.item_id), at: Timestamp::now() }).await?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

#[derive(Deserialize)]
struct VerificationBody {
    item_id: String,
    rating: i64,
    #[serde(default)]
    alternative: Option<String>,
}

async fn verification(
    State(state): State<Shared>,
    headers: HeaderMap,
    body: Result<Json<VerificationBody>, JsonRejection>,
) -> ApiResult<Response> {
    let who = contributor(&state, &headers)?;
    let Json(body) = body?;
    let command = Command::SubmitVerification {
        contributor: who,
        item: ItemId(body.item_id),
        rating: body.rating,
        alternative: body.alternative,
        at: Timestamp::now(),
    };
    match submit(&state, command).await? {
        Outcome::Verified(outcome) => Ok((StatusCode::CREATED, Json(*outcome)).into_response()),
        other => unreachable!("verification produced {other:?}"),
    }
}

#[derive(Deserialize)]
struct LeaderboardQuery {
    limit: Option<usize>,
}

async fn leaderboard(State(state): State<Shared>, Query(query): Query<LeaderboardQuery>) -> ApiResult<Response> {
    let limit = query.limit.unwrap_or(10);
    if limit == 0 {
        return Err(ApiError::invalid("invalid_limit", "limit must be positive"));
    }
    Ok(Json(state.platform.read().engine.leaderboard(limit)).into_response())
}

async fn profile(State(state): State<Shared>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
    let who = contributor(&state, &headers)?;
    if who.0 != id {
        return Err(ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such profile"));
    }
    let platform = state.platform.read();
    let profile = platform.engine.profile(&who).expect("token points at a contributor");
    Ok(Json(profile).into_response())
}

#[derive(Deserialize)]
struct TranslateBody {
    text: String,
    direction: Direction,
}

async fn translate(State(state): State<Shared>, body: Result<Json<TranslateBody>, JsonRejection>) -> ApiResult<Response> {
    let Json(body) = body?;
    let hit = {
        let platform = state.platform.read();
        translator::from_memory(&platform, &body.text, body.direction)
    };
    let hit = hit.map_err(|e| ApiError::invalid("empty_text", e.to_string()))?;
    match translator::translate(hit, state.external.as_ref(), &body.text, body.direction).await {
        Ok(t) => Ok(Json(t).into_response()),
        Err(TranslateError::EmptyText) => Err(ApiError::invalid("empty_text", "text is empty")),
        Err(e) => Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "translator_unavailable", e.to_string())),
    }
}

#[derive(Deserialize)]
struct ExportQuery {
    status: Option<String>,
    format: Option<String>,
    seed: Option<u64>,
}

async fn export(State(state): State<Shared>, headers: HeaderMap, Query(query): Query<ExportQuery>) -> ApiResult<Response> {
    if !is_admin(&state, &headers) {
        contributor(&state, &headers)?;
    }
    if let Some(format) = query.format.as_deref() {
        if format != "bitext" {
            return Err(ApiError::invalid("unknown_format", format!("unsupported export format {format:?}")));
        }
    }
    let filter = match query.status.as_deref() {
        Some(s) => s.parse::<StatusFilter>().map_err(|e| ApiError::invalid(e.reason(), e.to_string()))?,
        None => state.config.export.status,
    };
    let seed = query.seed.unwrap_or(state.config.export.seed);
    let ratios: SplitRatios = state.config.export.ratios;
    let bundle = {
        let platform = state.platform.read();
        export_pairs(platform.engine.pairs(), filter, seed, ratios).map_err(|e| ApiError::invalid(e.reason(), e.to_string()))?
    };
    let bytes = archive::to_tar(&bundle);
    Ok((
        StatusCode::OK,
        [
            (header::CONTENT_TYPE, "application/x-tar".to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"bitext-{filter}-{seed}.tar\"")),
        ],
        bytes,
    )
        .into_response())
}

#[derive(Deserialize)]
struct DocumentBody {
    src_doc: String,
    tgt_doc: String,
    #[serde(default)]
    meta: Value,
    #[serde(default)]
    src_lang: Option<LangTag>,
}

async fn stage_document(State(state): State<Shared>, headers: HeaderMap, body: Result<Json<DocumentBody>, JsonRejection>) -> ApiResult<Response> {
    require_admin(&state, &headers)?;
    let Json(body) = body?;
    let command = Command::StageDocument {
        src_lang: body.src_lang.unwrap_or(LangTag::En),
        src_text: body.src_doc,
        tgt_text: body.tgt_doc,
        meta: body.meta,
        at: Timestamp::now(),
    };
    match submit(&state, command).await? {
        Outcome::Staged(id) => Ok((StatusCode::ACCEPTED, Json(json!({ "document": id, "state": "staged" }))).into_response()),
        other => unreachable!("staging produced {other:?}"),
    }
}

async fn align_document(State(state): State<Shared>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
    require_admin(&state, &headers)?;
    let command = Command::AlignDocument {
        document: DocId(id),
        params: state.config.alignment,
        rules: state.config.filter,
        at: Timestamp::now(),
    };
    match submit(&state, command).await? {
        Outcome::Aligned(report) => Ok(Json(report).into_response()),
        other => unreachable!("alignment produced {other:?}"),
    }
}

async fn admin_state(State(state): State<Shared>, headers: HeaderMap) -> ApiResult<Response> {
    require_admin(&state, &headers)?;
    let seq = state.platform.last_seq();
    let platform = state.platform.read();
    Ok(Json(json!({
        "seq": seq,
        "digest": platform.digest(),
        "stats": platform.engine.stats(),
    }))
    .into_response())
}

/// Binds `config.listen` and serves until ctrl-c.
pub async fn serve(state: Shared) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(&state.config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    serve_on(listener, state, shutdown_signal()).await
}

pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: Shared,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}
