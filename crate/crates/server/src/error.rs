use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use crate::session::SessionError;

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("{0}")]
    NotFound(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("nothing has been accepted yet")]
    EmptyExport,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] vcrop_core::Error),
}

impl ServerError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServerError::NotFound(_) | ServerError::EmptyExport => StatusCode::NOT_FOUND,
            ServerError::Session(_) => StatusCode::CONFLICT,
            ServerError::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServerError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServerError::Invalid(_) | ServerError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            ServerError::NotFound(_) => "not_found",
            ServerError::Session(SessionError::Done) => "session_done",
            ServerError::Session(SessionError::NothingToAccept) => "nothing_to_accept",
            ServerError::Validation(_) => "validation_error",
            ServerError::BadRequest(_) => "bad_request",
            ServerError::EmptyExport => "empty_export",
            ServerError::Invalid(_) | ServerError::Core(_) => "internal",
        }
    }
}

impl IntoResponse for ServerError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.code(), "message": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}
