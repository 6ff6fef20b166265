use scires_core::ingest::IngestError;
use scires_core::learning::LearningError;
use scires_core::recommender::RecommendError;
use scires_core::response::ResponseError;
use scires_core::timeline::TimelineError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    InvalidInput,
    ValidationError,
    NotFound,
    VersionConflict,
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::InvalidInput => "invalid_input",
            ErrorCode::ValidationError => "validation_error",
            ErrorCode::NotFound => "not_found",
            ErrorCode::VersionConflict => "version_conflict",
            ErrorCode::Internal => "internal",
        }
    }
}

/// Error surfaced to CLI users and API clients: a machine-readable code plus
/// a human message.
#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[error("{message}")]
pub struct AppError {
    pub code: ErrorCode,
    pub message: String,
}

impl AppError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        AppError {
            code,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::InvalidInput, message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::ValidationError, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Internal, message)
    }

    /// 2 for internal failures, 1 for anything the user can fix.
    pub fn exit_code(&self) -> i32 {
        match self.code {
            ErrorCode::Internal => 2,
            _ => 1,
        }
    }
}

impl From<IngestError> for AppError {
    fn from(e: IngestError) -> Self {
        AppError::input(e.to_string())
    }
}

impl From<RecommendError> for AppError {
    fn from(e: RecommendError) -> Self {
        AppError::validation(e.to_string())
    }
}

impl From<TimelineError> for AppError {
    fn from(e: TimelineError) -> Self {
        AppError::validation(e.to_string())
    }
}

impl From<LearningError> for AppError {
    fn from(e: LearningError) -> Self {
        AppError::input(format!("performance model: {e}"))
    }
}

impl From<ResponseError> for AppError {
    fn from(e: ResponseError) -> Self {
        let code = match &e {
            ResponseError::VersionConflict { .. } => ErrorCode::VersionConflict,
            ResponseError::UnknownTarget(_) => ErrorCode::NotFound,
            _ => ErrorCode::ValidationError,
        };
        AppError::new(code, e.to_string())
    }
}
