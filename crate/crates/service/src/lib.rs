//! HTTP service for interactive elicitation sessions.
//!
//! Routes:
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/health` | | `{status, schemas}` |
//! | POST | `/v1/sessions` | `{problem, options?}` | `{id, schema}` |
//! | GET | `/v1/sessions/{id}/query` | | next query card or `{status: "complete"}` |
//! | POST | `/v1/sessions/{id}/responses` | `{query_id, answer}` | response summary |
//! | GET | `/v1/sessions/{id}/recommendation` | | recommendation |
//! | GET | `/v1/sessions/{id}/beliefs` | | parameter summaries |
//! | GET | `/v1/sessions/{id}/export` | | transcript document |
//! | POST | `/v1/sessions/restore` | transcript document | `{id, schema, answered}` |
//! | POST | `/v1/sessions/{id}/undo` | | `{id, answered}` |
//!
//! Errors come back as `{error, message}` with a 4xx/5xx status. Every
//! accepted response is on disk before it is acknowledged.

mod config;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gai_core::problem::{ProblemDocument, PROBLEM_SCHEMA};
use gai_core::session::{
    new_session_id, Answer, Clock, NextQuery, ParameterSummary, Recommendation, ResponseSummary, Session,
    SessionError, SessionExport, SessionOptions, SessionStore, SystemClock, TRANSCRIPT_SCHEMA,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub use config::{ServiceConfig, ENV_DATA_DIR, ENV_EVOI_WORKERS, ENV_LISTEN};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    fn status(&self) -> (StatusCode, &'static str) {
        use SessionError as S;
        match self {
            ServiceError::Config(_) | ServiceError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
            ServiceError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            ServiceError::Session(e) => match e {
                S::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
                S::StaleQuery { .. } => (StatusCode::CONFLICT, "stale_query"),
                S::NotReady(_) => (StatusCode::CONFLICT, "not_ready"),
                S::NothingToUndo => (StatusCode::CONFLICT, "nothing_to_undo"),
                S::Impossible(_) => (StatusCode::UNPROCESSABLE_ENTITY, "impossible_response"),
                S::BadResponse(_) | S::Elicit(_) => (StatusCode::UNPROCESSABLE_ENTITY, "bad_response"),
                S::Problem(_) | S::InvalidModel(_) | S::MissingAnchors | S::BadAnchors(_) | S::Inference(_) => {
                    (StatusCode::UNPROCESSABLE_ENTITY, "invalid_problem")
                }
                S::Corrupt(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_transcript"),
                S::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
            },
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, kind) = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        (status, Json(json!({ "error": kind, "message": self.to_string() }))).into_response()
    }
}

impl From<JsonRejection> for ServiceError {
    fn from(r: JsonRejection) -> Self {
        ServiceError::BadRequest(r.body_text())
    }
}

type Shared = Arc<Mutex<Session>>;

pub struct AppState {
    store: SessionStore,
    sessions: RwLock<HashMap<String, Shared>>,
    pool: Arc<rayon::ThreadPool>,
    clock: Arc<dyn Clock>,
}

impl AppState {
    /// Opens the data directory and replays every stored session.
    pub fn open(config: &ServiceConfig) -> Result<Self, ServiceError> {
        Self::with_clock(config, Arc::new(SystemClock))
    }

    pub fn with_clock(config: &ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self, ServiceError> {
        let store = SessionStore::open(&config.data_dir)?;
        let sessions = store.load_all()?.into_iter().map(|(id, s)| (id, Arc::new(Mutex::new(s)))).collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.evoi_workers)
            .thread_name(|i| format!("gai-evoi-{i}"))
            .build()
            .map_err(|e| ServiceError::Config(e.to_string()))?;
        Ok(AppState { store, sessions: RwLock::new(sessions), pool: Arc::new(pool), clock })
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map lock").len()
    }

    fn session(&self, id: &str) -> Result<Shared, ServiceError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_string()).into())
    }

    fn insert(&self, session: Session) -> Result<String, ServiceError> {
        self.store.save(&session)?;
        let id = session.id().to_string();
        self.sessions.write().expect("session map lock").insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }
}

/// Runs `f` on the session off the async runtime, inside the EVOI pool.
/// Mutations of one session are serialized by its mutex.
async fn with_session<T, F>(state: &Arc<AppState>, id: &str, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&AppState, &mut Session) -> Result<T, ServiceError> + Send + 'static,
{
    let shared = state.session(id)?;
    let state = state.clone();
    tokio::task::spawn_blocking(move || {
        let mut guard = shared.lock().map_err(|_| ServiceError::Internal("session lock poisoned".into()))?;
        let session: &mut Session = &mut guard;
        state.pool.install(|| f(&state, session))
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))?
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/restore", post(restore_session))
        .route("/v1/sessions/{id}/query", get(next_query))
        .route("/v1/sessions/{id}/responses", post(submit_response))
        .route("/v1/sessions/{id}/recommendation", get(recommendation))
        .route("/v1/sessions/{id}/beliefs", get(beliefs))
        .route("/v1/sessions/{id}/export", get(export))
        .route("/v1/sessions/{id}/undo", post(undo))
        .with_state(state)
}

/// Binds `config.listen` and serves until ctrl-c.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::open(&config)?);
    tracing::info!(sessions = state.session_count(), dir = %config.data_dir.display(), "loaded sessions");
    let listener = tokio::net::TcpListener::bind(&config.listen)
        .await
        .map_err(|e| ServiceError::Config(format!("cannot listen on {}: {e}", config.listen)))?;
    tracing::info!(addr = %config.listen, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "schemas": { "problem": PROBLEM_SCHEMA, "transcript": TRANSCRIPT_SCHEMA } }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub problem: serde_json::Value,
    #[serde(default)]
    pub options: SessionOptions,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub schema: String,
    pub answered: usize,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ServiceError> {
    let Json(req) = body?;
    let problem = ProblemDocument::from_json(&req.problem.to_string()).map_err(SessionError::from)?;
    let now = state.clock.now_ms();
    let st = state.clone();
    let created = tokio::task::spawn_blocking(move || {
        let session = Session::create(new_session_id(), problem, req.options, now)?;
        st.insert(session)
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(Created { id: created, schema: TRANSCRIPT_SCHEMA.into(), answered: 0 })))
}

/// Restores a transcript under a fresh id.
async fn restore_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<serde_json::Value>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ServiceError> {
    let Json(value) = body?;
    let mut export: SessionExport =
        serde_json::from_value(value).map_err(|e| SessionError::Corrupt(e.to_string()))?;
    export.header.id = new_session_id();
    let st = state.clone();
    let created = tokio::task::spawn_blocking(move || {
        let session = Session::restore(export)?;
        let answered = session.records().len();
        st.insert(session).map(|id| (id, answered))
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(Created { id: created.0, schema: TRANSCRIPT_SCHEMA.into(), answered: created.1 })))
}

async fn next_query(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<NextQuery>, ServiceError> {
    with_session(&state, &id, |_, s| Ok(s.next_query())).await.map(Json)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitRequest {
    pub query_id: String,
    pub answer: Answer,
}

async fn submit_response(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<SubmitRequest>, JsonRejection>,
) -> Result<Json<ResponseSummary>, ServiceError> {
    let Json(req) = body?;
    let now = state.clock.now_ms();
    with_session(&state, &id, move |st, s| {
        let summary = s.submit(&req.query_id, req.answer, now)?;
        if let Err(e) = st.store.append(s) {
            s.undo()?;
            return Err(e.into());
        }
        Ok(summary)
    })
    .await
    .map(Json)
}

async fn recommendation(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Recommendation>, ServiceError> {
    with_session(&state, &id, |_, s| Ok(s.recommendation()?)).await.map(Json)
}

async fn beliefs(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Vec<ParameterSummary>>, ServiceError> {
    with_session(&state, &id, |_, s| Ok(s.belief_summary())).await.map(Json)
}

async fn export(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionExport>, ServiceError> {
    with_session(&state, &id, |_, s| Ok(s.export())).await.map(Json)
}

async fn undo(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<serde_json::Value>, ServiceError> {
    with_session(&state, &id, |st, s| {
        let before = s.export();
        s.undo()?;
        if let Err(e) = st.store.save(s) {
            *s = Session::restore(before)?;
            return Err(e.into());
        }
        Ok(json!({ "id": s.id(), "answered": s.records().len() }))
    })
    .await
    .map(Json)
}
