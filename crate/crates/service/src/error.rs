use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    NotFound,
    InvalidRating,
    Untrained,
    BadRequest,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::InvalidRating => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Untrained => StatusCode::CONFLICT,
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
        }
    }
}

/// Error body returned by every failing endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip)]
    pub status: StatusCode,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), status: code.status() }
    }

    /// A failure on the server side, such as an unwritable data directory.
    /// The body still carries one of the four codes.
    pub fn internal(message: impl Into<String>) -> Self {
        Self { status: StatusCode::INTERNAL_SERVER_ERROR, ..Self::new(ErrorCode::BadRequest, message) }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    pub fn untrained() -> Self {
        Self::new(ErrorCode::Untrained, "no profile has been trained yet")
    }
}

impl From<bookrec_core::Error> for ApiError {
    fn from(err: bookrec_core::Error) -> Self {
        use bookrec_core::Error as E;
        let code = match &err {
            E::NotFound(_) | E::OutOfVocabulary { .. } => ErrorCode::NotFound,
            E::InvalidRating(_) => ErrorCode::InvalidRating,
            E::EmptyTraining => ErrorCode::Untrained,
            E::Io(_) => return Self::internal(err.to_string()),
            _ => ErrorCode::BadRequest,
        };
        Self::new(code, err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}
