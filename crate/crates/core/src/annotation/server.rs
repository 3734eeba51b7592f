use std::collections::HashMap;
use std::fs::File;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::{Mutex, RwLock};
use tower_http::services::ServeDir;

use crate::corpus::{parse_reviews, ReviewId, Source};

use super::{render_gold, AnnotationError, AnnotationSession, SessionEvent, SessionStore};

const PLACEHOLDER_PAGE: &str = "<!doctype html><html><head><meta charset=\"utf-8\"><title>threatsent annotation</title></head>\
<body><h1>Annotation service</h1><p>No UI bundle configured. The JSON API is under <code>/api/sessions</code>.</p></body></html>";

/// Sessions held in memory, each behind its own writer lock, backed by a
/// [`SessionStore`].
pub struct AnnotationService {
    store: SessionStore,
    sessions: RwLock<HashMap<String, Arc<Mutex<AnnotationSession>>>>,
    ui_dir: Option<PathBuf>,
}

impl AnnotationService {
    /// Opens the store and replays every session in it.
    pub fn open(store: SessionStore, ui_dir: Option<PathBuf>) -> Result<Self, AnnotationError> {
        let sessions = store
            .load_all()?
            .into_iter()
            .map(|s| (s.session_id().to_string(), Arc::new(Mutex::new(s))))
            .collect();
        Ok(Self {
            store,
            sessions: RwLock::new(sessions),
            ui_dir,
        })
    }

    /// Creates and persists a session over the given corpus file.
    pub async fn create_session(&self, corpus_path: &str, seed: u64) -> Result<(String, usize), AnnotationError> {
        let file = File::open(corpus_path)
            .map_err(|e| AnnotationError::Domain(format!("cannot open corpus {corpus_path}: {e}")))?;
        let reviews = parse_reviews(file, Source::Human)
            .map_err(|e| AnnotationError::Domain(format!("corpus {corpus_path}: {e}")))?;
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let created = AnnotationSession::plan(&reviews, seed, session_id.clone(), Utc::now())?;
        self.store.create(&created)?;
        let session = AnnotationSession::replay(&[created])?;
        let total = session.progress().total;
        self.sessions
            .write()
            .await
            .insert(session_id.clone(), Arc::new(Mutex::new(session)));
        Ok((session_id, total))
    }

    async fn session(&self, id: &str) -> Result<Arc<Mutex<AnnotationSession>>, AnnotationError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| AnnotationError::NotFound(id.to_string()))
    }

    pub async fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().await.keys().cloned().collect();
        ids.sort();
        ids
    }
}

struct ApiError(StatusCode, &'static str, String);

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> Self {
        let (status, kind) = match &e {
            AnnotationError::Domain(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
            AnnotationError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            AnnotationError::Sequencing { .. } => (StatusCode::CONFLICT, "out_of_sequence"),
            AnnotationError::Incomplete { .. } => (StatusCode::GONE, "incomplete"),
            AnnotationError::Corrupt { .. } | AnnotationError::Io(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "storage")
            }
        };
        ApiError(status, kind, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({"error": self.1, "detail": self.2}))).into_response()
    }
}

type Shared = Arc<AnnotationService>;

#[derive(Deserialize)]
struct CreateRequest {
    corpus_path: String,
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize)]
struct ScoreRequest {
    review_id: ReviewId,
    score: f64,
    #[serde(default)]
    is_crossover: bool,
    #[serde(default)]
    note: Option<String>,
}

#[derive(Deserialize)]
struct ExportQuery {
    #[serde(default)]
    partial: bool,
}

async fn create(
    State(svc): State<Shared>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(req) = body?;
    let (session_id, total) = svc.create_session(&req.corpus_path, req.seed).await?;
    Ok((StatusCode::CREATED, Json(json!({"session_id": session_id, "total": total}))))
}

async fn next(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = svc.session(&id).await?;
    let session = session.lock().await;
    Ok(match session.next_item() {
        Some(item) => Json(item).into_response(),
        None => Json(json!({"complete": true})).into_response(),
    })
}

async fn submit(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<ScoreRequest>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(req) = body?;
    let session = svc.session(&id).await?;
    let mut session = session.lock().await;
    let record = session.prepare_score(req.review_id, req.score, req.is_crossover, req.note, Utc::now())?;
    svc.store.append(&id, &SessionEvent::Scored(record.clone()))?;
    session.apply(record.clone());
    Ok((StatusCode::CREATED, Json(record)))
}

async fn progress(State(svc): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let session = svc.session(&id).await?;
    let progress = session.lock().await.progress();
    Ok(Json(progress))
}

async fn export(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> Result<impl IntoResponse, ApiError> {
    let session = svc.session(&id).await?;
    let gold = session.lock().await.export_gold(q.partial)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], render_gold(&gold)))
}

async fn placeholder() -> Html<&'static str> {
    Html(PLACEHOLDER_PAGE)
}

/// The JSON API plus the UI bundle (or a placeholder page) at `/`.
pub fn router(service: Shared) -> Router {
    let ui_dir = service.ui_dir.clone();
    let api = Router::new()
        .route("/api/sessions", post(create))
        .route("/api/sessions/{id}/next", get(next))
        .route("/api/sessions/{id}/scores", post(submit))
        .route("/api/sessions/{id}/progress", get(progress))
        .route("/api/sessions/{id}/export", get(export))
        .with_state(service);
    match ui_dir {
        Some(dir) if dir.join("index.html").is_file() => api.fallback_service(ServeDir::new(dir)),
        _ => api.route("/", get(placeholder)),
    }
}

/// Serves `app` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
