use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use visrisk_core::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Core(#[from] visrisk_core::Error),
    #[error("artifact {0} is not available")]
    MissingArtifact(&'static str),
    #[error("unknown view {0:?}")]
    UnknownView(String),
    #[error("{0}")]
    BadRequest(String),
}

pub type ServeResult<T> = std::result::Result<T, ServeError>;

impl ServeError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServeError::Core(e) => match e.kind() {
                ErrorKind::NotFound => StatusCode::NOT_FOUND,
                ErrorKind::Io => StatusCode::INTERNAL_SERVER_ERROR,
                _ => StatusCode::UNPROCESSABLE_ENTITY,
            },
            ServeError::MissingArtifact(_) | ServeError::UnknownView(_) => StatusCode::NOT_FOUND,
            ServeError::BadRequest(_) => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ServeError::Core(e) => match e.kind() {
                ErrorKind::Data => "data",
                ErrorKind::Numeric => "numeric",
                ErrorKind::NotFound => "not_found",
                ErrorKind::Io => "io",
            },
            ServeError::MissingArtifact(_) | ServeError::UnknownView(_) => "not_found",
            ServeError::BadRequest(_) => "data",
        }
    }
}

impl IntoResponse for ServeError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({
            "error": { "kind": self.kind(), "message": self.to_string() }
        });
        (self.status(), Json(body)).into_response()
    }
}
