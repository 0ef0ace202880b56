use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use pvtrade_core::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// Error body: `{"errors": [{"field", "message"}, ...]}`.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{status}: {errors:?}")]
pub struct ApiError {
    pub status: StatusCode,
    pub errors: Vec<FieldError>,
}

impl ApiError {
    /// 400: a value is malformed or outside its domain.
    pub fn bad(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            errors: vec![FieldError { field: field.into(), message: message.into() }],
        }
    }

    /// 422: fields are individually fine but cannot be combined.
    pub fn conflict(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            ..Self::bad(field, message)
        }
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        let field = match &e {
            ModelError::Domain { param, .. } => (*param).to_string(),
            ModelError::DiurnalFloor { what, .. } => (*what).to_string(),
            ModelError::OutsideDomain(_) => "latitude".into(),
            ModelError::Transmission(_) => "transmission".into(),
            _ => String::new(),
        };
        ApiError::bad(field, e.to_string())
    }
}

#[derive(Serialize)]
struct Body<'a> {
    errors: &'a [FieldError],
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(Body { errors: &self.errors })).into_response()
    }
}
