use std::fmt;

use cplan_core::cbr::{CbrError, FieldViolation};
use cplan_core::mcdm::McdmError;
use cplan_core::store::StoreError;
use cplan_core::workflow::WorkflowError;
use serde::{Deserialize, Serialize};

/// Machine-readable error codes. This set is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    ValidationFailed,
    Unauthorized,
    NotFound,
    IllegalTransition,
    Conflict,
    DomainError,
    StorageError,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> u16 {
        match self {
            ErrorCode::ValidationFailed => 400,
            ErrorCode::Unauthorized => 401,
            ErrorCode::NotFound => 404,
            ErrorCode::IllegalTransition | ErrorCode::Conflict => 409,
            ErrorCode::DomainError => 422,
            ErrorCode::StorageError | ErrorCode::Internal => 500,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::ValidationFailed => "validation_failed",
            ErrorCode::Unauthorized => "unauthorized",
            ErrorCode::NotFound => "not_found",
            ErrorCode::IllegalTransition => "illegal_transition",
            ErrorCode::Conflict => "conflict",
            ErrorCode::DomainError => "domain_error",
            ErrorCode::StorageError => "storage_error",
            ErrorCode::Internal => "internal",
        }
    }
}

/// Body of every non-2xx response, and of CLI failures on stderr.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<FieldViolation>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::ValidationFailed, message)
    }

    pub fn field(field: &str, message: impl Into<String>) -> Self {
        let message = message.into();
        Self {
            code: ErrorCode::ValidationFailed,
            message: format!("{field}: {message}"),
            details: vec![FieldViolation {
                field: field.to_string(),
                message,
            }],
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }

    pub fn status(&self) -> u16 {
        self.code.status()
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<CbrError> for ApiError {
    fn from(e: CbrError) -> Self {
        match e {
            CbrError::Validation(details) => Self {
                code: ErrorCode::ValidationFailed,
                message: CbrError::Validation(details.clone()).to_string(),
                details,
            },
            CbrError::InvalidConfig(_) => Self::validation(e.to_string()),
            other => Self::new(ErrorCode::DomainError, other.to_string()),
        }
    }
}

impl From<McdmError> for ApiError {
    fn from(e: McdmError) -> Self {
        Self::new(ErrorCode::DomainError, e.to_string())
    }
}

impl From<WorkflowError> for ApiError {
    fn from(e: WorkflowError) -> Self {
        match e {
            WorkflowError::IllegalTransition { .. } => {
                Self::new(ErrorCode::IllegalTransition, e.to_string())
            }
            WorkflowError::UnknownSession(_) => Self::not_found(e.to_string()),
            WorkflowError::UnknownScenario(ref id) => Self {
                code: ErrorCode::ValidationFailed,
                message: e.to_string(),
                details: vec![FieldViolation {
                    field: "scenario_id".into(),
                    message: format!("`{id}` is not in the scenario catalog"),
                }],
            },
            WorkflowError::DuplicateScenario(_) => Self::new(ErrorCode::Conflict, e.to_string()),
            WorkflowError::InvalidScenario(_) => Self::validation(e.to_string()),
            WorkflowError::Cbr(inner) => inner.into(),
            WorkflowError::Mcdm(inner) => inner.into(),
            WorkflowError::Inconsistent { .. } | WorkflowError::Invalid(_) => {
                Self::new(ErrorCode::DomainError, e.to_string())
            }
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        Self::new(ErrorCode::StorageError, e.to_string())
    }
}

impl From<serde_json::Error> for ApiError {
    fn from(e: serde_json::Error) -> Self {
        Self::validation(e.to_string())
    }
}
