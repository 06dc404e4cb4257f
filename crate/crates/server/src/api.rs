//! JSON API over a workspace of published questionnaires.
//!
//! | Method | Path                              | Body                                        |
//! |--------|-----------------------------------|---------------------------------------------|
//! | GET    | `/api/meetings`                   |                                             |
//! | GET    | `/api/meetings/{id}/questionnaire`|                                             |
//! | GET    | `/api/meetings/{id}/transcript`   |                                             |
//! | GET    | `/api/meetings/{id}/reports`      |                                             |
//! | POST   | `/api/sessions`                   | `{"meeting_id": ..}`                        |
//! | GET    | `/api/sessions/{id}`              |                                             |
//! | POST   | `/api/sessions/{id}/select`       | `{"subject": ..}`, `{"aspect": ..}` or `{"question": ..}` |
//! | POST   | `/api/sessions/{id}/back`         |                                             |
//!
//! `aspect` takes one aspect or a list. Session responses carry the session
//! id next to the rendered [`SessionView`]. Errors are
//! `{"error": CODE, "message": TEXT}` with status 404 for unknown meetings
//! and sessions, 409 for events the current state does not accept, and 422
//! for malformed bodies and unknown subjects, aspects or questions.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use preme_core::pipeline::{PipelineError, Workspace};
use preme_core::questionnaire::{Event, Questionnaire, QuestionnaireError, Session, SessionView};
use preme_core::transcript::Transcript;
use serde::Serialize;
use serde_json::Value;
use tracing::{info, warn};

pub struct AppState {
    workspace: Workspace,
    sessions: Mutex<HashMap<String, Session>>,
    questionnaires: RwLock<HashMap<String, Arc<Questionnaire>>>,
    next_session: AtomicU64,
}

impl AppState {
    pub fn new(workspace: Workspace) -> Arc<Self> {
        Arc::new(AppState {
            workspace,
            sessions: Mutex::new(HashMap::new()),
            questionnaires: RwLock::new(HashMap::new()),
            next_session: AtomicU64::new(1),
        })
    }

    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }

    /// Published questionnaires never change, so each is read once.
    fn questionnaire(&self, meeting_id: &str) -> Result<Arc<Questionnaire>, ApiError> {
        if let Some(q) = self.questionnaires.read().expect("lock").get(meeting_id) {
            return Ok(q.clone());
        }
        if !self.workspace.questionnaire_path(meeting_id).is_file() {
            return Err(ApiError::unknown_meeting(meeting_id));
        }
        let q = self
            .workspace
            .load_questionnaire(meeting_id)
            .map_err(ApiError::internal)?;
        if q.meeting_id != meeting_id {
            return Err(ApiError::unknown_meeting(meeting_id));
        }
        let q = Arc::new(q);
        self.questionnaires
            .write()
            .expect("lock")
            .insert(meeting_id.to_string(), q.clone());
        Ok(q)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: &'a str,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn unknown_meeting(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "UnknownMeeting",
            format!("no questionnaire for meeting {id:?}"),
        )
    }

    fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownSession", format!("no session {id:?}"))
    }

    fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "MalformedBody", message)
    }

    fn internal(e: PipelineError) -> Self {
        warn!(error = %e, "internal error");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())
    }
}

impl From<QuestionnaireError> for ApiError {
    fn from(e: QuestionnaireError) -> Self {
        let (status, code) = match &e {
            QuestionnaireError::UnknownSubject(_) => (StatusCode::UNPROCESSABLE_ENTITY, "UnknownSubject"),
            QuestionnaireError::UnknownAspect(_) => (StatusCode::UNPROCESSABLE_ENTITY, "UnknownAspect"),
            QuestionnaireError::UnknownQuestion(_) => (StatusCode::UNPROCESSABLE_ENTITY, "UnknownQuestion"),
            QuestionnaireError::IllegalTransition { .. } => (StatusCode::CONFLICT, "IllegalTransition"),
            QuestionnaireError::InconsistentInputs(_) | QuestionnaireError::Invalid(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "Internal")
            }
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code,
            message: &self.message,
        };
        (self.status, Json(serde_json::to_value(body).expect("serializes"))).into_response()
    }
}

#[derive(Debug, Serialize)]
pub struct SessionResponse {
    pub session_id: String,
    pub meeting_id: String,
    #[serde(flatten)]
    pub view: SessionView,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/meetings", get(list_meetings))
        .route("/api/meetings/{id}/questionnaire", get(get_questionnaire))
        .route("/api/meetings/{id}/transcript", get(get_transcript))
        .route("/api/meetings/{id}/reports", get(get_reports))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/select", post(select))
        .route("/api/sessions/{id}/back", post(back))
        .with_state(state)
}

/// Serves until the listener fails or ctrl-c arrives.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    info!(addr = ?listener.local_addr().ok(), "serving");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn list_meetings(State(state): State<Arc<AppState>>) -> ApiResult<Vec<String>> {
    state.workspace.meetings().map(Json).map_err(ApiError::internal)
}

async fn get_questionnaire(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Questionnaire> {
    Ok(Json(state.questionnaire(&id)?.as_ref().clone()))
}

async fn get_transcript(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Transcript> {
    state.questionnaire(&id)?;
    state
        .workspace
        .load_transcript(&id)
        .map(Json)
        .map_err(ApiError::internal)
}

async fn get_reports(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Value> {
    state.questionnaire(&id)?;
    if !state.workspace.reports_path(&id).is_file() {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "NoReports",
            format!("meeting {id:?} has not been evaluated"),
        ));
    }
    let report = state.workspace.load_reports(&id).map_err(ApiError::internal)?;
    Ok(Json(serde_json::to_value(report).expect("serializes")))
}

fn parse_object(body: &Bytes) -> Result<serde_json::Map<String, Value>, ApiError> {
    match serde_json::from_slice::<Value>(body) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(ApiError::malformed("body must be a JSON object")),
        Err(e) => Err(ApiError::malformed(format!("invalid JSON: {e}"))),
    }
}

fn respond(session_id: String, session: &Session, q: &Questionnaire) -> ApiResult<SessionResponse> {
    Ok(Json(SessionResponse {
        session_id,
        meeting_id: session.meeting_id.clone(),
        view: session.view(q)?,
    }))
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<SessionResponse> {
    let map = parse_object(&body)?;
    let meeting_id = map
        .get("meeting_id")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::malformed("expected {\"meeting_id\": string}"))?;
    let q = state.questionnaire(meeting_id)?;
    let session = Session::new(meeting_id);
    let id = format!("s{}", state.next_session.fetch_add(1, Ordering::Relaxed));
    state.sessions.lock().expect("lock").insert(id.clone(), session.clone());
    info!(session_id = %id, meeting_id, "session created");
    respond(id, &session, &q)
}

fn current(state: &AppState, id: &str) -> Result<Session, ApiError> {
    state
        .sessions
        .lock()
        .expect("lock")
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::unknown_session(id))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SessionResponse> {
    let session = current(&state, &id)?;
    let q = state.questionnaire(&session.meeting_id)?;
    respond(id, &session, &q)
}

/// Reads the one key of a select body into an event.
pub fn parse_select(map: &serde_json::Map<String, Value>) -> Result<Event, ApiError> {
    if map.len() != 1 {
        return Err(ApiError::malformed("expected exactly one of subject, aspect, question"));
    }
    let (key, value) = map.iter().next().expect("one entry");
    let string = |v: &Value| {
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| ApiError::malformed(format!("{key} must be a string")))
    };
    match key.as_str() {
        "subject" => Ok(Event::SelectSubject(string(value)?)),
        "question" => Ok(Event::SelectQuestion(string(value)?)),
        "aspect" | "aspects" => match value {
            Value::String(s) => Ok(Event::SelectAspects(vec![s.clone()])),
            Value::Array(items) => items
                .iter()
                .map(string)
                .collect::<Result<Vec<_>, _>>()
                .map(Event::SelectAspects),
            _ => Err(ApiError::malformed("aspect must be a string or a list of strings")),
        },
        other => Err(ApiError::malformed(format!("unknown key {other:?}"))),
    }
}

/// Applies one event. The session map is locked for the whole step, so a
/// session sees one writer at a time and a rejected event changes nothing.
fn apply(state: &AppState, id: String, event: &Event) -> ApiResult<SessionResponse> {
    let mut sessions = state.sessions.lock().expect("lock");
    let session = sessions.get(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    let q = state.questionnaire(&session.meeting_id)?;
    let next = session.step(&q, event)?;
    sessions.insert(id.clone(), next.clone());
    drop(sessions);
    respond(id, &next, &q)
}

async fn select(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<SessionResponse> {
    current(&state, &id)?;
    let event = parse_select(&parse_object(&body)?)?;
    apply(&state, id, &event)
}

async fn back(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SessionResponse> {
    apply(&state, id, &Event::Back)
}
