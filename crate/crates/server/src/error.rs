use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use branchbook_core::dataset::DatasetError;
use branchbook_core::session::SessionError;
use serde::Serialize;
use serde_json::{json, Value};

/// The JSON error envelope every failing request returns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>, details: Value) -> Self {
        Self { status, code, message: message.into(), details }
    }

    pub fn unknown_dataset(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownDataset", format!("no dataset '{id}'"), json!({ "datasetId": id }))
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownSession", format!("no session '{id}'"), json!({ "sessionId": id }))
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", message, Value::Null)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message, Value::Null)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message, Value::Null)
    }
}

impl From<DatasetError> for ApiError {
    fn from(e: DatasetError) -> Self {
        let details = match &e {
            DatasetError::RaggedRows { row, expected, found } => {
                json!({ "row": row, "expected": expected, "found": found })
            }
            DatasetError::DuplicateColumnName(name) => json!({ "column": name }),
            _ => Value::Null,
        };
        let code = match e {
            DatasetError::EmptyInput => "EmptyInput",
            DatasetError::RaggedRows { .. } => "RaggedRows",
            DatasetError::DuplicateColumnName(_) => "DuplicateColumnName",
            DatasetError::Csv(_) => "MalformedCsv",
        };
        Self::new(StatusCode::BAD_REQUEST, code, e.to_string(), details)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        use SessionError::*;
        let (status, code, details) = match &e {
            NoMatchingInsight => (StatusCode::UNPROCESSABLE_ENTITY, "NoMatchingInsight", Value::Null),
            UnknownCell(id) => (StatusCode::NOT_FOUND, "UnknownCell", json!({ "cellId": id })),
            ArchivedCell(id) => (StatusCode::CONFLICT, "ArchivedCell", json!({ "cellId": id })),
            UnknownQuestion(q) => (StatusCode::NOT_FOUND, "UnknownQuestion", json!({ "questionId": q })),
            NotAVisualizationCell(id) => (StatusCode::CONFLICT, "NotAVisualizationCell", json!({ "cellId": id })),
            NotAnActionList(id) => (StatusCode::CONFLICT, "NotAnActionList", json!({ "cellId": id })),
            IndexOutOfRange { index, len } => (
                StatusCode::UNPROCESSABLE_ENTITY,
                "IndexOutOfRange",
                json!({ "actionIndex": index, "actions": len }),
            ),
            AlreadyArchived(id) => (StatusCode::CONFLICT, "AlreadyArchived", json!({ "cellId": id })),
            CannotDeleteRoot => (StatusCode::CONFLICT, "CannotDeleteRoot", json!({ "cellId": 1 })),
            NotArchived(id) => (StatusCode::CONFLICT, "NotArchived", json!({ "cellId": id })),
            CorruptLog { seq, .. } => (StatusCode::UNPROCESSABLE_ENTITY, "CorruptLog", json!({ "seq": seq })),
            VersionMismatch(_) => (StatusCode::CONFLICT, "VersionMismatch", Value::Null),
            Malformed(_) => (StatusCode::BAD_REQUEST, "MalformedSession", Value::Null),
            Chart(_) => (StatusCode::INTERNAL_SERVER_ERROR, "ChartError", Value::Null),
        };
        Self::new(status, code, e.to_string(), details)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}
