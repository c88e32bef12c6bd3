use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use bifluxon_core::formats::{FormatError, SCHEMA_VERSION};
use bifluxon_core::CoreError;
use serde::{Deserialize, Serialize};

/// Error body returned with every non-2xx status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub schema_version: String,
    /// Offending field path when one can be named.
    pub field: Option<String>,
    pub error: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{message}")]
    BadRequest { field: Option<String>, message: String },
    #[error("a fit is already running")]
    FitBusy,
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn bad(field: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError::BadRequest {
            field: Some(field.into()),
            message: message.into(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest { .. } => StatusCode::BAD_REQUEST,
            ApiError::FitBusy => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { name, .. } => ApiError::bad(name, e.to_string()),
            CoreError::AtFlux { ref source, .. } => match source.as_ref() {
                CoreError::InvalidParameter { name, .. } => ApiError::bad(*name, e.to_string()),
                _ => ApiError::Internal(e.to_string()),
            },
            CoreError::Unidentifiable(_) => ApiError::BadRequest {
                field: None,
                message: e.to_string(),
            },
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<FormatError> for ApiError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Invalid { source, .. } => source.into(),
            FormatError::Schema { .. } => ApiError::bad("schema_version", e.to_string()),
            FormatError::Parse { .. } => ApiError::BadRequest {
                field: None,
                message: e.to_string(),
            },
            FormatError::Io { .. } => ApiError::Internal(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let field = match &self {
            ApiError::BadRequest { field, .. } => field.clone(),
            _ => None,
        };
        let body = ErrorBody {
            schema_version: SCHEMA_VERSION.into(),
            field,
            error: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}
