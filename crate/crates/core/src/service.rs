//! HTTP session service over the correction loop.
//!
//! A session holds one [`CorrectionRun`] per sentence of the submitted
//! treebank and runs them in order, stopping whenever a question needs an
//! answer. Trees cross the wire in the treebank text format.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex as StdMutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{Mutex, RwLock};

use crate::corrector::{
    correct_tree, diagnose, AutoPolicy, CorrectionReport, CorrectionRun, CorrectorError, Diagnosis, Evaluation,
    Progress, Question, RunState, Step,
};
use crate::deptree::{parse_treebank, serialize_tree, serialize_treebank, DepTree, TreebankError};
use crate::lexicon::Lexicon;
use crate::profile::{default_profile, Profile, ProfileError, Weights, WeightUpdate};

/// Id of the profile sessions use when they name none.
pub const DEFAULT_PROFILE_ID: &str = "default";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    pub detail: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>, detail: serde_json::Value) -> Self {
        ApiError { status: status.as_u16(), code: code.into(), message: message.into(), detail }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} `{id}`"), json!({ "id": id }))
    }
}

impl From<TreebankError> for ApiError {
    fn from(e: TreebankError) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "treebank_parse", e.to_string(), json!({ "line": e.line() }))
    }
}

impl From<CorrectorError> for ApiError {
    fn from(e: CorrectorError) -> Self {
        match &e {
            CorrectorError::StaleQuestion { pending, given } => Self::new(
                StatusCode::CONFLICT,
                "stale_question",
                e.to_string(),
                json!({ "pending": pending, "given": given }),
            ),
            CorrectorError::NoPendingQuestion => {
                Self::new(StatusCode::CONFLICT, "no_pending_question", e.to_string(), serde_json::Value::Null)
            }
            CorrectorError::InvalidChoice(v) => {
                Self::new(StatusCode::BAD_REQUEST, "invalid_choice", e.to_string(), json!({ "value": v }))
            }
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string(), serde_json::Value::Null),
        }
    }
}

fn profile_error(status: StatusCode, e: ProfileError) -> ApiError {
    let line = match &e {
        ProfileError::Syntax { line } | ProfileError::UnknownKey { line, .. } | ProfileError::BadValue { line, .. } => {
            json!({ "line": line })
        }
        _ => serde_json::Value::Null,
    };
    ApiError::new(status, "invalid_profile", e.to_string(), line)
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_json", e.body_text(), serde_json::Value::Null)
    }
}

/// JSON body whose rejections are reported as [`ApiError`]s.
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
struct Body<T>(T);

/// Which profile a session reads and updates.
#[derive(Debug, Clone)]
enum Binding {
    Shared(String),
    Inline(Profile),
}

#[derive(Debug)]
struct Session {
    id: String,
    binding: Binding,
    runs: Vec<CorrectionRun>,
    diagnoses: Vec<Diagnosis>,
    current: usize,
    /// Whole treebank text after creation and after every answer.
    history: Vec<String>,
}

impl Session {
    fn treebank(&self) -> String {
        let trees: Vec<DepTree> = self.runs.iter().map(|r| r.tree().clone()).collect();
        serialize_treebank(&trees)
    }

    /// Question ids are unique within a session: the sentence position is
    /// prepended to the run's own id.
    fn question_id(&self, index: usize, inner: &str) -> String {
        format!("s{}-{}", index + 1, inner)
    }

    fn pending(&self) -> Option<Question> {
        let run = self.runs.get(self.current)?;
        run.pending_question().map(|q| Question { id: self.question_id(self.current, &q.id), ..q.clone() })
    }

    fn state(&self) -> RunState {
        if self.pending().is_some() {
            RunState::AwaitingAnswer
        } else if self.runs.iter().any(|r| r.state() == RunState::Aborted) {
            RunState::Aborted
        } else if self.runs.iter().all(|r| r.state() == RunState::Converged) {
            RunState::Converged
        } else if self.runs.iter().all(|r| r.state().is_finished()) {
            RunState::NotConverged
        } else {
            RunState::Running
        }
    }

    /// Runs sentences until one asks a question or all are done.
    fn advance(&mut self, lexicon: &Lexicon, profile: &Profile) -> Result<(), CorrectorError> {
        while self.current < self.runs.len() {
            match self.runs[self.current].advance(lexicon, profile)? {
                Progress::Question(_) => return Ok(()),
                Progress::Finished => self.current += 1,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceView {
    pub sentence_id: String,
    pub state: RunState,
    pub original_text: String,
    pub text: String,
    pub tree: String,
    pub passes: usize,
    pub steps: Vec<Step>,
    pub pending_evaluation: Option<Evaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub state: RunState,
    pub profile_id: Option<String>,
    pub profile: Profile,
    pub pending_question: Option<Question>,
    pub treebank: String,
    pub sentences: Vec<SentenceView>,
    /// Diagnoses of the submitted sentences before any correction.
    pub diagnoses: Vec<Diagnosis>,
    pub history: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerView {
    pub session: SessionView,
    pub weight_update: Option<WeightUpdate>,
    /// Change of each weight caused by this answer (zero when not learning).
    pub weight_deltas: Weights,
    pub threshold: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct CreateSession {
    pub treebank: String,
    #[serde(default)]
    pub profile_id: Option<String>,
    #[serde(default)]
    pub profile: Option<Profile>,
}

fn default_learn() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
pub struct PostAnswer {
    pub question_id: String,
    pub value: crate::features::Value,
    #[serde(default = "default_learn")]
    pub learn: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct CheckRequest {
    pub treebank: String,
    #[serde(default)]
    pub profile_id: Option<String>,
    #[serde(default)]
    pub profile: Option<Profile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceReport {
    pub sentence_id: String,
    pub original_text: String,
    pub text: String,
    pub tree: String,
    pub converged: bool,
    pub passes: usize,
    pub report: CorrectionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResponse {
    pub reports: Vec<SentenceReport>,
}

pub struct AppState {
    lexicon: Arc<Lexicon>,
    profiles: StdMutex<HashMap<String, Arc<StdMutex<Profile>>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    /// Where the default profile is saved after it changes.
    profile_file: Option<PathBuf>,
}

impl AppState {
    pub fn new(lexicon: Lexicon, default: Profile, profile_file: Option<PathBuf>) -> Arc<Self> {
        let profiles = HashMap::from([(DEFAULT_PROFILE_ID.to_string(), Arc::new(StdMutex::new(default)))]);
        Arc::new(AppState {
            lexicon: Arc::new(lexicon),
            profiles: StdMutex::new(profiles),
            sessions: RwLock::new(HashMap::new()),
            profile_file,
        })
    }

    fn shared_profile(&self, id: &str) -> Result<Arc<StdMutex<Profile>>, ApiError> {
        self.profiles
            .lock()
            .expect("profile table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("profile", id))
    }

    fn persist(&self, id: &str, profile: &Profile) -> Result<(), ApiError> {
        match &self.profile_file {
            Some(path) if id == DEFAULT_PROFILE_ID => std::fs::write(path, profile.to_text()).map_err(|e| {
                ApiError::new(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    "profile_io",
                    e.to_string(),
                    json!({ "path": path.display().to_string() }),
                )
            }),
            _ => Ok(()),
        }
    }

    fn binding(&self, profile_id: Option<String>, inline: Option<Profile>) -> Result<Binding, ApiError> {
        match (profile_id, inline) {
            (Some(_), Some(_)) => Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "bad_request",
                "give either profile_id or profile, not both",
                serde_json::Value::Null,
            )),
            (None, Some(p)) => {
                p.validate().map_err(|e| profile_error(StatusCode::BAD_REQUEST, e))?;
                Ok(Binding::Inline(p))
            }
            (id, None) => {
                let id = id.unwrap_or_else(|| DEFAULT_PROFILE_ID.to_string());
                self.shared_profile(&id)?;
                Ok(Binding::Shared(id))
            }
        }
    }

    fn snapshot(&self, binding: &Binding) -> Result<Profile, ApiError> {
        match binding {
            Binding::Inline(p) => Ok(p.clone()),
            Binding::Shared(id) => Ok(self.shared_profile(id)?.lock().expect("profile poisoned").clone()),
        }
    }

    fn view(&self, session: &Session) -> Result<SessionView, ApiError> {
        let sentences = session
            .runs
            .iter()
            .map(|run| SentenceView {
                sentence_id: run.tree().sentence_id.clone(),
                state: run.state(),
                original_text: run.original().text(),
                text: run.tree().text(),
                tree: serialize_tree(run.tree()),
                passes: run.passes(),
                steps: run.steps().to_vec(),
                pending_evaluation: run.pending_evaluation().cloned(),
            })
            .collect();
        Ok(SessionView {
            id: session.id.clone(),
            state: session.state(),
            profile_id: match &session.binding {
                Binding::Shared(id) => Some(id.clone()),
                Binding::Inline(_) => None,
            },
            profile: self.snapshot(&session.binding)?,
            pending_question: session.pending(),
            treebank: session.treebank(),
            sentences,
            diagnoses: session.diagnoses.clone(),
            history: session.history.clone(),
        })
    }

    async fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions.read().await.get(id).cloned().ok_or_else(|| ApiError::not_found("session", id))
    }
}

pub type SharedState = Arc<AppState>;

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/answers", post(post_answer))
        .route("/v1/check", post(batch_check))
        .route("/v1/profiles/{id}", get(get_profile).put(put_profile))
        .with_state(state)
}

async fn create_session(
    State(state): State<SharedState>,
    Body(req): Body<CreateSession>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let trees = parse_treebank(&req.treebank)?;
    let binding = state.binding(req.profile_id, req.profile)?;
    let profile = state.snapshot(&binding)?;
    let diagnoses = trees
        .iter()
        .map(|t| diagnose(t, &state.lexicon, &profile))
        .collect::<Result<Vec<_>, _>>()?;
    let mut session = Session {
        id: uuid::Uuid::new_v4().to_string(),
        binding,
        runs: trees.into_iter().map(CorrectionRun::new).collect(),
        diagnoses,
        current: 0,
        history: Vec::new(),
    };
    session.history.push(session.treebank());
    session.advance(&state.lexicon, &profile)?;
    if session.history.last() != Some(&session.treebank()) {
        session.history.push(session.treebank());
    }
    let view = state.view(&session)?;
    state.sessions.write().await.insert(session.id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(state): State<SharedState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let session = state.session(&id).await?;
    let session = session.lock().await;
    Ok(Json(state.view(&session)?))
}

async fn post_answer(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    Body(req): Body<PostAnswer>,
) -> Result<Json<AnswerView>, ApiError> {
    let session = state.session(&id).await?;
    let mut session = session.lock().await;
    let Some(pending) = session.pending() else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "no_pending_question",
            format!("question `{}` is not pending", req.question_id),
            json!({ "given": req.question_id }),
        ));
    };
    if pending.id != req.question_id {
        return Err(CorrectorError::StaleQuestion { pending: pending.id, given: req.question_id }.into());
    }
    let index = session.current;
    let inner = session.runs[index].pending_question().expect("pending").id.clone();

    // The profile is read, updated and used to resume under one lock, so a
    // shared profile sees each answer as a whole.
    let lexicon = state.lexicon.clone();
    let (update, profile_after) = match session.binding.clone() {
        Binding::Inline(mut profile) => {
            let update = session.runs[index].answer(&inner, req.value, req.learn, &mut profile)?;
            session.binding = Binding::Inline(profile.clone());
            session.advance(&lexicon, &profile)?;
            (update, profile)
        }
        Binding::Shared(pid) => {
            let shared = state.shared_profile(&pid)?;
            let mut profile = shared.lock().expect("profile poisoned");
            let update = session.runs[index].answer(&inner, req.value, req.learn, &mut profile)?;
            if update.is_some() {
                state.persist(&pid, &profile)?;
            }
            session.advance(&lexicon, &profile)?;
            (update, profile.clone())
        }
    };
    let treebank = session.treebank();
    session.history.push(treebank);

    let weight_deltas = match &update {
        Some(u) => Weights {
            a: u.after.a - u.before.a,
            b: u.after.b - u.before.b,
            c: u.after.c - u.before.c,
            d: u.after.d - u.before.d,
        },
        None => Weights { a: 0.0, b: 0.0, c: 0.0, d: 0.0 },
    };
    Ok(Json(AnswerView {
        session: state.view(&session)?,
        weight_update: update,
        weight_deltas,
        threshold: profile_after.threshold,
    }))
}

async fn batch_check(
    State(state): State<SharedState>,
    Body(req): Body<CheckRequest>,
) -> Result<Json<CheckResponse>, ApiError> {
    let trees = parse_treebank(&req.treebank)?;
    let binding = state.binding(req.profile_id, req.profile)?;
    let mut profile = state.snapshot(&binding)?;
    let reports = trees
        .iter()
        .map(|tree| {
            let report = correct_tree(tree, &state.lexicon, &mut profile, &mut AutoPolicy)?;
            Ok(SentenceReport {
                sentence_id: tree.sentence_id.clone(),
                original_text: tree.text(),
                text: report.final_tree.text(),
                tree: serialize_tree(&report.final_tree),
                converged: report.converged,
                passes: report.passes,
                report,
            })
        })
        .collect::<Result<Vec<_>, ApiError>>()?;
    Ok(Json(CheckResponse { reports }))
}

async fn get_profile(State(state): State<SharedState>, Path(id): Path<String>) -> Result<Json<Profile>, ApiError> {
    let shared = state.shared_profile(&id)?;
    let profile = shared.lock().expect("profile poisoned").clone();
    Ok(Json(profile))
}

/// Replaces or creates a shared profile.
async fn put_profile(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    Body(profile): Body<Profile>,
) -> Result<Json<Profile>, ApiError> {
    profile.validate().map_err(|e| profile_error(StatusCode::UNPROCESSABLE_ENTITY, e))?;
    let shared = {
        let mut table = state.profiles.lock().expect("profile table poisoned");
        table.entry(id.clone()).or_insert_with(|| Arc::new(StdMutex::new(default_profile()))).clone()
    };
    let mut slot = shared.lock().expect("profile poisoned");
    *slot = profile.clone();
    state.persist(&id, &slot)?;
    Ok(Json(profile))
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: SharedState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
