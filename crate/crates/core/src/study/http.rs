use std::collections::BTreeMap;
use std::future::Future;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use super::{Study, StudyConfig, StudyError};

pub const ADMIN_HEADER: &str = "x-admin-secret";

impl IntoResponse for StudyError {
    fn into_response(self) -> Response {
        let status = match &self {
            StudyError::NotFound(_) => StatusCode::NOT_FOUND,
            StudyError::Conflict(_) => StatusCode::CONFLICT,
            StudyError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            StudyError::Unauthorized => StatusCode::UNAUTHORIZED,
            StudyError::Internal(e) => {
                log::error!("{e}");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

type AppState = Arc<Study>;

#[derive(Deserialize)]
struct CreateSession {
    demographics: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct Submit {
    ratings: BTreeMap<String, i64>,
}

#[derive(Deserialize)]
struct ExportQuery {
    #[serde(default)]
    format: Option<String>,
}

async fn health(State(study): State<AppState>) -> impl IntoResponse {
    Json(json!({ "status": "ok", "sessions": study.session_count() }))
}

async fn create_session(
    State(study): State<AppState>,
    Json(body): Json<CreateSession>,
) -> Result<impl IntoResponse, StudyError> {
    let info = study.create_session(body.demographics)?;
    Ok((StatusCode::CREATED, Json(info)))
}

async fn session_info(
    State(study): State<AppState>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, StudyError> {
    Ok(Json(study.session_info(&id)?))
}

async fn next_trial(
    State(study): State<AppState>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, StudyError> {
    Ok(Json(study.next_trial(&id)?))
}

async fn practice(
    State(study): State<AppState>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, StudyError> {
    Ok(Json(study.practice_trial(&id)?))
}

async fn submit(
    State(study): State<AppState>,
    Path((id, n)): Path<(String, usize)>,
    Json(body): Json<Submit>,
) -> Result<impl IntoResponse, StudyError> {
    let ack = tokio::task::spawn_blocking(move || study.submit(&id, n, &body.ratings))
        .await
        .map_err(|e| StudyError::Internal(crate::Error::Io(std::io::Error::other(e))))??;
    Ok(Json(ack))
}

async fn audio(
    State(study): State<AppState>,
    Path(file): Path<String>,
) -> Result<impl IntoResponse, StudyError> {
    let token = file
        .strip_suffix(".wav")
        .ok_or_else(|| StudyError::NotFound("unknown audio token".into()))?
        .to_owned();
    let bytes = tokio::task::spawn_blocking(move || study.audio(&token))
        .await
        .map_err(|e| StudyError::Internal(crate::Error::Io(std::io::Error::other(e))))??;
    Ok((
        [
            (header::CONTENT_TYPE, "audio/wav"),
            (header::CACHE_CONTROL, "private, max-age=3600"),
        ],
        bytes,
    ))
}

async fn export(
    State(study): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<ExportQuery>,
) -> Result<Response, StudyError> {
    let secret = headers.get(ADMIN_HEADER).and_then(|v| v.to_str().ok());
    study.check_admin(secret)?;
    match q.format.as_deref().unwrap_or("json") {
        "json" => Ok(Json(study.export_document()).into_response()),
        "csv" => Ok((
            [(header::CONTENT_TYPE, "text/csv; charset=utf-8")],
            study.export_csv()?,
        )
            .into_response()),
        other => Err(StudyError::Invalid(format!("unknown export format {other:?}"))),
    }
}

/// The HTTP API, plus the static frontend bundle when `static_dir` is given.
pub fn router(study: Arc<Study>, static_dir: Option<&std::path::Path>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/session", post(create_session))
        .route("/api/session/{id}", get(session_info))
        .route("/api/session/{id}/trial", get(next_trial))
        .route("/api/session/{id}/practice", get(practice))
        .route("/api/session/{id}/trial/{n}", post(submit))
        .route("/api/audio/{file}", get(audio))
        .route("/api/export", get(export))
        .with_state(study);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Runs the service until `shutdown` resolves.
pub async fn serve_with_shutdown(
    config: &StudyConfig,
    listener: tokio::net::TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> crate::Result<()> {
    let secret = config.admin_secret()?;
    let study = Arc::new(Study::open(config, &secret)?);
    let app = router(study, config.static_dir.as_deref());
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

/// Binds `config.bind` and serves until Ctrl-C.
pub async fn serve(config: &StudyConfig) -> crate::Result<()> {
    // fail on a missing secret before touching the network
    config.admin_secret()?;
    let listener = tokio::net::TcpListener::bind(&config.bind).await.map_err(|e| {
        crate::Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot bind {}: {e}", config.bind),
        ))
    })?;
    log::info!("listening on {}", listener.local_addr()?);
    serve_with_shutdown(config, listener, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
