use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cuepath_core::career::CareerError;
use cuepath_core::engine::EngineError;
use cuepath_core::ids::SessionId;
use cuepath_core::report::ReportError;
use cuepath_core::store::StoreError;

use crate::view::ErrorBody;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub session_id: Option<SessionId>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            session_id: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }

    pub fn not_found(id: &SessionId) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            message: format!("session {id} not found"),
            session_id: Some(id.clone()),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }

    pub fn for_session(mut self, id: &SessionId) -> Self {
        self.session_id = Some(id.clone());
        self
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match &e {
            StoreError::NotFound(id) => ApiError::not_found(id),
            StoreError::InvalidId(_) => ApiError::bad_request(e.to_string()),
            _ => ApiError::internal(e.to_string()),
        }
    }
}

impl From<CareerError> for ApiError {
    fn from(e: CareerError) -> Self {
        let status = match e {
            CareerError::IllegalState { .. } => StatusCode::CONFLICT,
            CareerError::Validation(_) | CareerError::Physics(_) => StatusCode::BAD_REQUEST,
            CareerError::NotFound(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Career(c) => c.into(),
            EngineError::Store(s) => s.into(),
            EngineError::Generation(g) => ApiError::new(
                StatusCode::BAD_GATEWAY,
                format!("round generation failed: {g}"),
            ),
            EngineError::Report(ReportError::State(c)) => c.into(),
            EngineError::Report(r) => ApiError::new(
                StatusCode::BAD_GATEWAY,
                format!("report generation failed: {r}"),
            ),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.message,
            session_id: self.session_id,
        };
        (self.status, Json(body)).into_response()
    }
}
