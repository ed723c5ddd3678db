//! JSON over HTTP, versioned under `/v1`.
//!
//! Every response body carries `schema_version`. Session responses also
//! carry the full session so that clients can stay stateless.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::QueryRejection;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ffcombat_core::{query, CombatStatus, GameState, QueryResponseF64, RoundOutcome, SolverConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;
use uuid::Uuid;

use crate::advice::{advise, what_if, Advice, WhatIf, WhatIfError};
use crate::cache::TableCache;
use crate::session::{CombatSession, HeroStats, OpponentStats, RoundEntry, SessionError, SessionLog};
use crate::SCHEMA_VERSION;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_request", message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ErrorBody {
    pub schema_version: u32,
    pub error: ErrorDetail,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            schema_version: SCHEMA_VERSION,
            error: ErrorDetail { code: self.code.to_string(), message: self.message },
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let code = match e {
            SessionError::InvalidStats(_) => "invalid_stats",
            SessionError::IllegalTransition(_) => "illegal_transition",
            SessionError::NothingToUndo => "nothing_to_undo",
            SessionError::SchemaVersion(_) => "unsupported_schema_version",
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string())
    }
}

impl From<ffcombat_core::Error> for ApiError {
    fn from(e: ffcombat_core::Error) -> Self {
        use ffcombat_core::Error as E;
        match e {
            E::OutOfBounds { .. } | E::InvalidState(_) | E::InvalidConfig(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_state", e.to_string())
            }
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
        }
    }
}

impl From<WhatIfError> for ApiError {
    fn from(e: WhatIfError) -> Self {
        match e {
            WhatIfError::Session(e) => e.into(),
            WhatIfError::Core(e) => e.into(),
        }
    }
}

/// JSON body whose every rejection is a 400.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    S: Send + Sync,
    T: DeserializeOwned,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| ApiJson(v))
            .map_err(|rej| ApiError::bad_request(rej.body_text()))
    }
}

type SessionHandle = Arc<Mutex<CombatSession>>;

pub struct AppState {
    cache: Arc<TableCache>,
    sessions: Mutex<HashMap<Uuid, SessionHandle>>,
    log_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(cache: Arc<TableCache>) -> Self {
        AppState { cache, sessions: Mutex::new(HashMap::new()), log_dir: None }
    }

    /// Appends every session event as a JSON line to `<dir>/<id>.jsonl`.
    pub fn with_log_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.log_dir = Some(dir.into());
        self
    }

    fn session(&self, id: &str) -> Result<SessionHandle, ApiError> {
        let missing = || ApiError::not_found(format!("no session {id}"));
        let id = Uuid::parse_str(id).map_err(|_| missing())?;
        self.sessions.lock().expect("sessions lock").get(&id).cloned().ok_or_else(missing)
    }

    fn insert(&self, session: CombatSession) -> SessionHandle {
        let id = session.id();
        let handle = Arc::new(Mutex::new(session));
        self.sessions.lock().expect("sessions lock").insert(id, Arc::clone(&handle));
        handle
    }

    fn append_event(&self, id: Uuid, event: &Event) -> Result<(), ApiError> {
        let Some(dir) = &self.log_dir else { return Ok(()) };
        let write = || -> std::io::Result<()> {
            std::fs::create_dir_all(dir)?;
            let mut f = OpenOptions::new().create(true).append(true).open(dir.join(format!("{id}.jsonl")))?;
            let line = serde_json::to_string(event).map_err(std::io::Error::other)?;
            writeln!(f, "{line}")
        };
        write().map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "log_write", e.to_string()))
    }

    fn advice_for(&self, session: &CombatSession) -> Result<Advice, ApiError> {
        let table = self.cache.get(&session.solver_config())?;
        Ok(advise(&table, session.state())?)
    }
}

/// Line of an append-only session log.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created { schema_version: u32, hero: HeroStats, opponent: OpponentStats },
    Round { entry: RoundEntry, state: GameState },
    Undo { state: GameState },
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SessionView {
    pub id: Uuid,
    pub hero: HeroStats,
    pub opponent: OpponentStats,
    pub state: GameState,
    pub status: CombatStatus,
    pub rounds: Vec<RoundEntry>,
}

impl SessionView {
    fn of(s: &CombatSession) -> Self {
        SessionView {
            id: s.id(),
            hero: *s.hero(),
            opponent: *s.opponent(),
            state: *s.state(),
            status: s.status(),
            rounds: s.rounds().to_vec(),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SessionResponse {
    pub schema_version: u32,
    pub session: SessionView,
    pub advice: Advice,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct WhatIfResponse {
    pub schema_version: u32,
    pub session: SessionView,
    pub what_if: WhatIf,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct QueryReply {
    pub schema_version: u32,
    pub query: QueryResponseF64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct Health {
    pub schema_version: u32,
    pub status: String,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub hero: HeroStats,
    pub opponent: OpponentStats,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub dk: i32,
    pub s_h: i32,
    pub s_o: i32,
    pub l: i32,
    #[serde(default)]
    pub outcome: Option<RoundOutcome>,
}

#[derive(Deserialize, Debug)]
pub struct WhatIfParams {
    pub outcome: RoundOutcome,
    #[serde(default)]
    pub use_luck: bool,
}

type Shared = State<Arc<AppState>>;

fn respond(state: &AppState, session: &CombatSession) -> Result<SessionResponse, ApiError> {
    Ok(SessionResponse {
        schema_version: SCHEMA_VERSION,
        session: SessionView::of(session),
        advice: state.advice_for(session)?,
    })
}

async fn health() -> Json<Health> {
    Json(Health { schema_version: SCHEMA_VERSION, status: "ok".into() })
}

async fn create_session(
    State(app): Shared,
    ApiJson(body): ApiJson<CreateSession>,
) -> Result<(StatusCode, Json<SessionResponse>), ApiError> {
    let session = CombatSession::new(body.hero, body.opponent)?;
    let reply = respond(&app, &session)?;
    app.append_event(
        session.id(),
        &Event::Created { schema_version: SCHEMA_VERSION, hero: body.hero, opponent: body.opponent },
    )?;
    app.insert(session);
    Ok((StatusCode::CREATED, Json(reply)))
}

async fn import_session(
    State(app): Shared,
    ApiJson(log): ApiJson<SessionLog>,
) -> Result<(StatusCode, Json<SessionResponse>), ApiError> {
    let mut session = CombatSession::replay(&log)?;
    if app.session(&session.id().to_string()).is_ok() {
        // Keep the log's rounds but give the copy its own identity.
        let rounds = session.rounds().to_vec();
        session = CombatSession::new(log.hero, log.opponent)?;
        for r in rounds {
            session.record(r)?;
        }
    }
    let reply = respond(&app, &session)?;
    app.append_event(
        session.id(),
        &Event::Created { schema_version: SCHEMA_VERSION, hero: log.hero, opponent: log.opponent },
    )?;
    for (i, entry) in session.rounds().iter().enumerate() {
        let mut prefix = CombatSession::with_id(session.id(), log.hero, log.opponent)?;
        for e in &session.rounds()[..=i] {
            prefix.record(*e)?;
        }
        app.append_event(session.id(), &Event::Round { entry: *entry, state: *prefix.state() })?;
    }
    app.insert(session);
    Ok((StatusCode::CREATED, Json(reply)))
}

async fn get_session(State(app): Shared, Path(id): Path<String>) -> Result<Json<SessionResponse>, ApiError> {
    let handle = app.session(&id)?;
    let session = handle.lock().expect("session lock");
    Ok(Json(respond(&app, &session)?))
}

async fn record_round(
    State(app): Shared,
    Path(id): Path<String>,
    ApiJson(entry): ApiJson<RoundEntry>,
) -> Result<Json<SessionResponse>, ApiError> {
    let handle = app.session(&id)?;
    let mut session = handle.lock().expect("session lock");
    let state = *session.record(entry)?;
    app.append_event(session.id(), &Event::Round { entry, state })?;
    Ok(Json(respond(&app, &session)?))
}

async fn undo(State(app): Shared, Path(id): Path<String>) -> Result<Json<SessionResponse>, ApiError> {
    let handle = app.session(&id)?;
    let mut session = handle.lock().expect("session lock");
    session.undo()?;
    app.append_event(session.id(), &Event::Undo { state: *session.state() })?;
    Ok(Json(respond(&app, &session)?))
}

async fn get_what_if(
    State(app): Shared,
    Path(id): Path<String>,
    params: Result<Query<WhatIfParams>, QueryRejection>,
) -> Result<Json<WhatIfResponse>, ApiError> {
    let handle = app.session(&id)?;
    let Query(params) = params.map_err(|rej| ApiError::bad_request(rej.body_text()))?;
    let session = handle.lock().expect("session lock");
    let table = app.cache.get(&session.solver_config())?;
    let result = what_if(&table, session.state(), params.outcome, params.use_luck)?;
    Ok(Json(WhatIfResponse { schema_version: SCHEMA_VERSION, session: SessionView::of(&session), what_if: result }))
}

async fn export_log(State(app): Shared, Path(id): Path<String>) -> Result<Json<SessionLog>, ApiError> {
    let handle = app.session(&id)?;
    let session = handle.lock().expect("session lock");
    Ok(Json(session.export_log()))
}

async fn post_query(State(app): Shared, ApiJson(req): ApiJson<QueryRequest>) -> Result<Json<QueryReply>, ApiError> {
    let d = SolverConfig::default();
    let config = SolverConfig {
        dk: req.dk,
        max_s_h: d.max_s_h.max(req.s_h),
        max_s_o: d.max_s_o.max(req.s_o),
        max_l: d.max_l.max(req.l),
        ..d
    };
    if req.s_h > crate::session::MAX_STAT || req.s_o > crate::session::MAX_STAT || req.l > crate::session::MAX_STAT {
        return Err(SessionError::InvalidStats(format!("values above {} are not served", crate::session::MAX_STAT)).into());
    }
    if req.l < 0 {
        return Err(SessionError::InvalidStats("luck must be nonnegative".into()).into());
    }
    let table = app.cache.get(&config)?;
    let state = GameState::new(req.s_h, req.s_o, req.l, req.dk);
    Ok(Json(QueryReply { schema_version: SCHEMA_VERSION, query: query(&table, &state, req.outcome)? }))
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/query", post(post_query))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/import", post(import_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/advice", get(get_session))
        .route("/v1/sessions/{id}/rounds", post(record_round))
        .route("/v1/sessions/{id}/what-if", get(get_what_if))
        .route("/v1/sessions/{id}/undo", post(undo))
        .route("/v1/sessions/{id}/log", get(export_log))
        .fallback(fallback)
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(listen: &str, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
