use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use deid_api::ErrorBody;
use deid_core::Error;

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    UnsupportedMediaType(String),
    Core(Error),
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::UnsupportedMediaType(_) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Core(e) => core_status(e),
        }
    }

    fn message(&self) -> String {
        match self {
            ApiError::NotFound(m) | ApiError::BadRequest(m) | ApiError::UnsupportedMediaType(m) | ApiError::Internal(m) => {
                m.clone()
            }
            ApiError::Core(e) => e.to_string(),
        }
    }
}

/// 400 for unreadable input, 422 when input does not fit the data, 409 when
/// an operation's precondition does not hold.
fn core_status(e: &Error) -> StatusCode {
    match e {
        Error::Csv { .. } | Error::Parse { .. } | Error::EmptyTable | Error::MalformedPredicate(_) | Error::Json(_) => {
            StatusCode::BAD_REQUEST
        }
        Error::UnknownColumn(_)
        | Error::DuplicateColumn(_)
        | Error::KindMismatch { .. }
        | Error::SchemaMismatch(_)
        | Error::InvalidScenario(_)
        | Error::Classification { .. }
        | Error::IncompatibleComparison { .. }
        | Error::RowCountMismatch { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        Error::EmptyDataset | Error::EmptySubset | Error::InvalidParameter(_) | Error::AllMissing(_) | Error::Infeasible(_) => {
            StatusCode::CONFLICT
        }
        Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::Core(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        match r {
            JsonRejection::MissingJsonContentType(_) => ApiError::UnsupportedMediaType(r.body_text()),
            _ => ApiError::BadRequest(r.body_text()),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::BadRequest(r.body_text())
    }
}

impl From<PathRejection> for ApiError {
    fn from(r: PathRejection) -> Self {
        ApiError::BadRequest(r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self.message(), "request failed");
        }
        (status, Json(ErrorBody { error: self.message() })).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
