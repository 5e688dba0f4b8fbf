use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ellsberg_core::engine::EngineError;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("no session {0:?}")]
    UnknownSession(String),
    #[error("join code not recognised")]
    BadJoinCode,
    #[error("missing or unknown participant token")]
    BadToken,
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    InvalidBody(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("storage failure: {0}")]
    Storage(String),
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
    code: &'static str,
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ApiError::BadJoinCode => StatusCode::FORBIDDEN,
            ApiError::BadToken => StatusCode::UNAUTHORIZED,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::InvalidBody(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Engine(e) => match e {
                EngineError::NotMonitor(_) | EngineError::NotSubject(_) => StatusCode::FORBIDDEN,
                EngineError::UnknownParticipant(_) => StatusCode::UNAUTHORIZED,
                EngineError::SeedMismatch { .. } => StatusCode::UNPROCESSABLE_ENTITY,
                EngineError::InvalidSession(_) => StatusCode::BAD_REQUEST,
                EngineError::InvalidLog(_) => StatusCode::INTERNAL_SERVER_ERROR,
                EngineError::WrongPhase { .. }
                | EngineError::DuplicateParticipant(_)
                | EngineError::DuplicateMonitor
                | EngineError::DuplicateRule(_)
                | EngineError::DuplicateAnswer(_)
                | EngineError::AlreadyRecorded(_)
                | EngineError::NotReady { .. } => StatusCode::CONFLICT,
            },
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ApiError::UnknownSession(_) => "unknown_session",
            ApiError::BadJoinCode => "bad_join_code",
            ApiError::BadToken => "bad_token",
            ApiError::BadRequest(_) => "bad_request",
            ApiError::InvalidBody(_) => "invalid_body",
            ApiError::Storage(_) => "storage",
            ApiError::Engine(e) => match e {
                EngineError::WrongPhase { .. } => "wrong_phase",
                EngineError::NotMonitor(_) => "not_monitor",
                EngineError::NotSubject(_) => "not_subject",
                EngineError::UnknownParticipant(_) => "unknown_participant",
                EngineError::DuplicateParticipant(_) => "duplicate_participant",
                EngineError::DuplicateMonitor => "duplicate_monitor",
                EngineError::DuplicateRule(_) => "duplicate_rule",
                EngineError::DuplicateAnswer(_) => "duplicate_answer",
                EngineError::AlreadyRecorded(_) => "already_recorded",
                EngineError::NotReady { .. } => "not_ready",
                EngineError::SeedMismatch { .. } => "seed_mismatch",
                EngineError::InvalidLog(_) => "invalid_log",
                EngineError::InvalidSession(_) => "invalid_session",
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.to_string(),
            code: self.code(),
        };
        (self.status(), Json(body)).into_response()
    }
}
