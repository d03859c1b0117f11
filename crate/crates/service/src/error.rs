use adlmon_core::api::ErrorBody;
use adlmon_core::dialogue::{DialogueError, SessionId};
use adlmon_core::pipeline::PipelineError;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("{0}")]
    Forbidden(String),
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    fn status(&self) -> (StatusCode, &'static str) {
        match self {
            ApiError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ApiError::Forbidden(_) => (StatusCode::FORBIDDEN, "forbidden"),
            ApiError::Schema(_) => (StatusCode::UNPROCESSABLE_ENTITY, "schema"),
            ApiError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Dialogue(DialogueError::UnknownSession(id)) => ApiError::UnknownSession(id),
            PipelineError::Dialogue(DialogueError::EmptyUtterance) => ApiError::Schema("text must not be empty".into()),
            PipelineError::UnknownTopic(t) => ApiError::Schema(format!("unknown topic `{t}`")),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = self.status();
        let body = ErrorBody { error: code.into(), message: self.to_string() };
        (status, Json(body)).into_response()
    }
}
