use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ndc_search::index::IndexError;
use ndc_search::{DbError, StoreError};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Validation,
    NotFound,
    Auth,
    Storage,
    Internal,
}

impl ErrorKind {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorKind::Validation => StatusCode::BAD_REQUEST,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Auth => StatusCode::UNAUTHORIZED,
            ErrorKind::Storage | ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// Error body: `{"error": kind, "code": detail?, "message": text}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{kind:?}: {message}")]
pub struct ApiError {
    #[serde(rename = "error")]
    pub kind: ErrorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<&'static str>,
    pub message: String,
}

impl ApiError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            code: None,
            message: message.into(),
        }
    }

    pub fn with_code(mut self, code: &'static str) -> Self {
        self.code = Some(code);
        self
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Validation, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::NotFound, message)
    }

    pub fn no_searchable_terms() -> Self {
        Self::validation("query has no searchable terms").with_code("no_searchable_terms")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.kind.status().is_server_error() {
            tracing::error!(kind = ?self.kind, message = %self.message, "request failed");
        }
        (self.kind.status(), Json(self)).into_response()
    }
}

impl From<DbError> for ApiError {
    fn from(e: DbError) -> Self {
        let message = e.to_string();
        match e {
            DbError::UnknownTable(_) => Self::not_found(message),
            DbError::Store(s) => match s {
                StoreError::Arity { .. } => Self::validation(message).with_code("arity"),
                StoreError::ReservedByte(_) => Self::validation(message).with_code("reserved_byte"),
                StoreError::NotFound(_) => Self::not_found(message),
                s if s.is_storage() => Self::new(ErrorKind::Storage, message),
                _ => Self::new(ErrorKind::Internal, message),
            },
            DbError::Index(IndexError::PValueOutOfRange(_)) => Self::validation(message),
            DbError::Index(_) => Self::new(ErrorKind::Internal, message),
        }
    }
}
