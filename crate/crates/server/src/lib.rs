//! HTTP service for running live sessions.
//!
//! Each session has one writer: mutating requests queue on a per-session
//! lock, apply one engine event, append it to the log file and publish the
//! new record on a watch channel. Reads and the event stream only look at
//! the latest published record.

mod error;
mod store;
mod view;

use std::collections::HashMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use ellsberg_core::engine::{
    advance, BettingDraws, DrawMode, EngineError, Phase, Role, SessionEvent, SessionRecord,
};
use ellsberg_core::model::{Color, DecisionRule, DrawOutcome, ExperimentConfig, RiskyColor};
use ellsberg_core::stats::HypotheticalAnswer;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::{watch, Mutex};
use tokio_stream::wrappers::WatchStream;
use tokio_stream::{Stream, StreamExt};
use uuid::Uuid;

pub use error::ApiError;
pub use store::{Access, JoinCodes, Store};
pub use view::{snapshot, Controls, ModeKind, OwnView, RosterEntry, Snapshot, Viewer};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CreateSessionRequest {
    #[serde(default)]
    pub config: Option<ExperimentConfig>,
    #[serde(default)]
    pub mode: Option<DrawMode>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreateSessionResponse {
    pub session_id: String,
    pub join_codes: JoinCodes,
    pub version: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct JoinRequest {
    pub code: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JoinResponse {
    pub participant_id: String,
    pub role: Role,
    pub token: String,
    pub version: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RuleRequest {
    pub token: String,
    pub rule: DecisionRule,
}

/// Draws for the current phase. In seeded sessions the fields may be left
/// out and the generated draws are recorded instead.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DrawsRequest {
    pub token: String,
    #[serde(default)]
    pub outcome: Option<DrawOutcome>,
    #[serde(default)]
    pub ambiguous: Option<Color>,
    #[serde(default)]
    pub risky: Option<RiskyColor>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TokenRequest {
    pub token: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QuestionnaireRequest {
    pub token: String,
    pub answer: HypotheticalAnswer,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct TokenQuery {
    pub token: Option<String>,
}

struct LiveSession {
    writer: Mutex<()>,
    record: watch::Sender<Arc<SessionRecord>>,
    access: RwLock<Access>,
}

impl LiveSession {
    fn new(record: SessionRecord, access: Access) -> LiveSession {
        LiveSession {
            writer: Mutex::new(()),
            record: watch::Sender::new(Arc::new(record)),
            access: RwLock::new(access),
        }
    }

    fn current(&self) -> Arc<SessionRecord> {
        self.record.borrow().clone()
    }
}

struct Inner {
    sessions: RwLock<HashMap<String, Arc<LiveSession>>>,
    store: Option<Store>,
}

/// Shared handle to every live session.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn fresh_code() -> String {
    Uuid::new_v4().simple().to_string()[..6].to_ascii_uppercase()
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => ApiError::InvalidBody(e.to_string()),
        _ => ApiError::BadRequest(e.to_string()),
    })
}

impl AppState {
    /// Sessions live only as long as the process.
    pub fn in_memory() -> AppState {
        AppState {
            inner: Arc::new(Inner {
                sessions: RwLock::new(HashMap::new()),
                store: None,
            }),
        }
    }

    /// Sessions are written to `dir`, and any already there are replayed.
    pub fn persistent(dir: impl Into<PathBuf>) -> Result<AppState, ApiError> {
        let store = Store::open(dir)?;
        let sessions = store
            .load_all()?
            .into_iter()
            .map(|(record, access)| (record.session_id.clone(), Arc::new(LiveSession::new(record, access))))
            .collect();
        Ok(AppState {
            inner: Arc::new(Inner {
                sessions: RwLock::new(sessions),
                store: Some(store),
            }),
        })
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.inner.sessions.read().expect("session map").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// The latest record of a session.
    pub fn record(&self, id: &str) -> Option<Arc<SessionRecord>> {
        self.session(id).ok().map(|s| s.current())
    }

    fn session(&self, id: &str) -> Result<Arc<LiveSession>, ApiError> {
        self.inner
            .sessions
            .read()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }

    fn participant_for(live: &LiveSession, token: &str) -> Result<String, ApiError> {
        live.access
            .read()
            .expect("access table")
            .tokens
            .get(token)
            .cloned()
            .ok_or(ApiError::BadToken)
    }

    fn viewer(live: &LiveSession, token: Option<&str>) -> Result<Viewer, ApiError> {
        match token {
            None | Some("") => Ok(Viewer::Public),
            Some(t) => Self::participant_for(live, t).map(Viewer::Participant),
        }
    }

    fn save_access(&self, id: &str, access: &Access) -> Result<(), ApiError> {
        match &self.inner.store {
            Some(store) => store.save_access(id, access),
            None => Ok(()),
        }
    }

    /// Serializes one event through the session's writer. `build` sees the
    /// latest record and decides which event to apply.
    async fn commit(
        &self,
        live: &LiveSession,
        build: impl FnOnce(&SessionRecord) -> Result<SessionEvent, ApiError>,
    ) -> Result<Arc<SessionRecord>, ApiError> {
        let _turn = live.writer.lock().await;
        let current = live.current();
        let event = build(&current)?;
        let next = advance(&current, event, now_ms())?;
        if let Some(store) = &self.inner.store {
            let logged = next.log.last().expect("an event was just applied");
            store.append(&next.session_id, logged)?;
        }
        let next = Arc::new(next);
        live.record.send_replace(next.clone());
        Ok(next)
    }

    pub fn create_session(&self, request: CreateSessionRequest) -> Result<CreateSessionResponse, ApiError> {
        let session_id = Uuid::new_v4().simple().to_string();
        let config = request.config.unwrap_or_default();
        let mode = request.mode.unwrap_or(DrawMode::Manual);
        let record = SessionRecord::create(&session_id, config, mode, now_ms())?;
        let mut codes = JoinCodes {
            subject: fresh_code(),
            monitor: fresh_code(),
        };
        while codes.monitor == codes.subject {
            codes.monitor = fresh_code();
        }
        let access = Access {
            codes: codes.clone(),
            tokens: HashMap::new(),
        };
        if let Some(store) = &self.inner.store {
            store.append(&session_id, &record.log[0])?;
            store.save_access(&session_id, &access)?;
        }
        let version = record.version();
        self.inner
            .sessions
            .write()
            .expect("session map")
            .insert(session_id.clone(), Arc::new(LiveSession::new(record, access)));
        Ok(CreateSessionResponse {
            session_id,
            join_codes: codes,
            version,
        })
    }

    pub async fn join(&self, id: &str, request: JoinRequest) -> Result<JoinResponse, ApiError> {
        let live = self.session(id)?;
        let role = {
            let access = live.access.read().expect("access table");
            let code = request.code.trim().to_ascii_uppercase();
            if code == access.codes.subject {
                Role::Subject
            } else if code == access.codes.monitor {
                Role::Monitor
            } else {
                return Err(ApiError::BadJoinCode);
            }
        };
        let mut participant_id = String::new();
        let record = self
            .commit(&live, |rec| {
                participant_id = match role {
                    Role::Monitor if rec.monitor().is_some() => return Err(EngineError::DuplicateMonitor.into()),
                    Role::Monitor => "monitor".to_string(),
                    Role::Subject => format!("s{:02}", rec.subjects().count() + 1),
                };
                Ok(SessionEvent::Joined {
                    participant_id: participant_id.clone(),
                    role,
                })
            })
            .await?;
        let token = Uuid::new_v4().simple().to_string();
        {
            let mut access = live.access.write().expect("access table");
            access.tokens.insert(token.clone(), participant_id.clone());
            self.save_access(id, &access)?;
        }
        Ok(JoinResponse {
            participant_id,
            role,
            token,
            version: record.version(),
        })
    }

    pub async fn submit_rule(&self, id: &str, request: RuleRequest) -> Result<Snapshot, ApiError> {
        let live = self.session(id)?;
        let who = Self::participant_for(&live, &request.token)?;
        let record = self
            .commit(&live, |_| {
                Ok(SessionEvent::RuleSubmitted {
                    participant_id: who.clone(),
                    rule: request.rule,
                })
            })
            .await?;
        Ok(snapshot(&record, &Viewer::Participant(who)))
    }

    pub async fn record_draws(&self, id: &str, request: DrawsRequest) -> Result<Snapshot, ApiError> {
        let live = self.session(id)?;
        let who = Self::participant_for(&live, &request.token)?;
        let record = self
            .commit(&live, |rec| {
                if rec.participant(&who).map(|p| p.role) != Some(Role::Monitor) {
                    return Err(EngineError::NotMonitor("enter draws").into());
                }
                let seeded = rec.seeded_draws();
                match rec.phase {
                    Phase::InformationalDraws => {
                        let outcome = request
                            .outcome
                            .or(seeded.map(|(info, _)| info))
                            .ok_or_else(|| ApiError::InvalidBody("missing informational draws `outcome`".into()))?;
                        Ok(SessionEvent::InfoDrawsRecorded { by: who.clone(), outcome })
                    }
                    Phase::BetResolution => {
                        let draws = match (request.ambiguous, request.risky, seeded) {
                            (Some(ambiguous), Some(risky), _) => BettingDraws { ambiguous, risky },
                            (None, None, Some((_, generated))) => generated,
                            _ => {
                                return Err(ApiError::InvalidBody(
                                    "betting draws need both `ambiguous` and `risky`".into(),
                                ))
                            }
                        };
                        Ok(SessionEvent::BettingDrawsRecorded { by: who.clone(), draws })
                    }
                    phase => Err(EngineError::WrongPhase {
                        action: "entering draws",
                        phase,
                    }
                    .into()),
                }
            })
            .await?;
        Ok(snapshot(&record, &Viewer::Participant(who)))
    }

    pub async fn advance_phase(&self, id: &str, request: TokenRequest) -> Result<Snapshot, ApiError> {
        let live = self.session(id)?;
        let who = Self::participant_for(&live, &request.token)?;
        let record = self
            .commit(&live, |rec| {
                let to = rec.phase.next().ok_or(EngineError::WrongPhase {
                    action: "advancing",
                    phase: rec.phase,
                })?;
                Ok(SessionEvent::PhaseAdvanced {
                    by: who.clone(),
                    from: rec.phase,
                    to,
                })
            })
            .await?;
        Ok(snapshot(&record, &Viewer::Participant(who)))
    }

    pub async fn answer_questionnaire(&self, id: &str, request: QuestionnaireRequest) -> Result<Snapshot, ApiError> {
        let live = self.session(id)?;
        let who = Self::participant_for(&live, &request.token)?;
        let record = self
            .commit(&live, |_| {
                Ok(SessionEvent::QuestionnaireAnswered {
                    participant_id: who.clone(),
                    answer: request.answer,
                })
            })
            .await?;
        Ok(snapshot(&record, &Viewer::Participant(who)))
    }

    pub fn state(&self, id: &str, token: Option<&str>) -> Result<Snapshot, ApiError> {
        let live = self.session(id)?;
        let viewer = Self::viewer(&live, token)?;
        Ok(snapshot(&live.current(), &viewer))
    }

    /// The session's choices in the dataset CSV layout, once it is closed.
    pub fn export_csv(&self, id: &str) -> Result<String, ApiError> {
        let record = self.session(id)?.current();
        if record.phase != Phase::Closed {
            return Err(EngineError::WrongPhase {
                action: "exporting",
                phase: record.phase,
            }
            .into());
        }
        record.to_dataset().to_csv().map_err(|e| ApiError::Storage(e.to_string()))
    }

    /// Snapshots for `token`, starting with the current one and then one per
    /// new version.
    pub fn subscribe(&self, id: &str, token: Option<&str>) -> Result<impl Stream<Item = Snapshot> + use<>, ApiError> {
        let live = self.session(id)?;
        let viewer = Self::viewer(&live, token)?;
        let updates = WatchStream::new(live.record.subscribe());
        Ok(updates.map(move |record| snapshot(&record, &viewer)))
    }
}

async fn create_handler(State(app): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let request = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSessionRequest::default()
    } else {
        parse_body(&body)?
    };
    Ok((StatusCode::CREATED, Json(app.create_session(request)?)))
}

async fn join_handler(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<JoinResponse>, ApiError> {
    Ok(Json(app.join(&id, parse_body(&body)?).await?))
}

async fn rule_handler(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Snapshot>, ApiError> {
    Ok(Json(app.submit_rule(&id, parse_body(&body)?).await?))
}

async fn draws_handler(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Snapshot>, ApiError> {
    Ok(Json(app.record_draws(&id, parse_body(&body)?).await?))
}

async fn advance_handler(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Snapshot>, ApiError> {
    Ok(Json(app.advance_phase(&id, parse_body(&body)?).await?))
}

async fn questionnaire_handler(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Snapshot>, ApiError> {
    Ok(Json(app.answer_questionnaire(&id, parse_body(&body)?).await?))
}

async fn state_handler(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<TokenQuery>,
) -> Result<Json<Snapshot>, ApiError> {
    Ok(Json(app.state(&id, query.token.as_deref())?))
}

async fn events_handler(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<TokenQuery>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let snapshots = app.subscribe(&id, query.token.as_deref())?;
    let events = snapshots.map(|snap| {
        let data = serde_json::to_string(&snap).expect("snapshots serialize");
        Ok(Event::default().event("snapshot").id(snap.version.to_string()).data(data))
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

async fn export_handler(State(app): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let csv = app.export_csv(&id)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_handler))
        .route("/sessions/{id}/join", post(join_handler))
        .route("/sessions/{id}/rule", post(rule_handler))
        .route("/sessions/{id}/draws", post(draws_handler))
        .route("/sessions/{id}/advance", post(advance_handler))
        .route("/sessions/{id}/questionnaire", post(questionnaire_handler))
        .route("/sessions/{id}/state", get(state_handler))
        .route("/sessions/{id}/events", get(events_handler))
        .route("/sessions/{id}/export.csv", get(export_handler))
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, data_dir: Option<PathBuf>) -> std::io::Result<()> {
    let state = match data_dir {
        Some(dir) => AppState::persistent(dir).map_err(std::io::Error::other)?,
        None => AppState::in_memory(),
    };
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
