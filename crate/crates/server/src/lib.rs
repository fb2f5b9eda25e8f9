//! JSON-over-HTTP adapter for datasets, sessions, question panels and
//! tree snapshots. Handlers only translate requests into session and
//! recommender calls; all behavior lives in `branchbook-core`.

pub mod error;
pub mod state;
mod store;

use std::collections::HashMap;
use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use branchbook_core::dataset::Role;
use branchbook_core::session::{Cell, CellId, Event, RootSelector, TreeSnapshot};
use branchbook_core::Question;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use state::{dataset_id, AppState, StartupError};

use state::{DatasetEntry, SessionEntry};

type ApiResult<T> = Result<T, ApiError>;

/// Builds the service. With `static_dir`, unmatched paths serve files from it.
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/datasets", post(upload_dataset).get(list_datasets))
        .route("/datasets/{id}", get(get_dataset))
        .route("/datasets/{id}/space", get(get_space))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/export", get(export_session))
        .route("/sessions/{id}/tree", get(get_tree))
        .route("/sessions/{id}/cells/{cell}", get(get_cell).delete(delete_cell))
        .route("/sessions/{id}/cells/{cell}/recommendations", get(recommendations))
        .route("/sessions/{id}/cells/{cell}/select", post(select))
        .route("/sessions/{id}/cells/{cell}/restore", post(restore))
        .with_state(state)
        .layer(DefaultBodyLimit::max(64 * 1024 * 1024))
        .layer(CorsLayer::permissive());
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::not_found("no such endpoint") }),
    }
}

fn parse_json<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn parse_cell_id(raw: &str) -> ApiResult<CellId> {
    raw.parse().map_err(|_| ApiError::bad_request(format!("cell id '{raw}' is not a number")))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ColumnSchema {
    name: String,
    role: Role,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Schema {
    name: String,
    row_count: usize,
    columns: Vec<ColumnSchema>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DatasetView {
    dataset_id: String,
    schema: Schema,
    insight_count: usize,
}

impl DatasetView {
    fn new(id: String, entry: &DatasetEntry) -> Self {
        let table = entry.engine.table();
        Self {
            dataset_id: id,
            schema: Schema {
                name: entry.name.clone(),
                row_count: table.row_count,
                columns: table
                    .columns
                    .iter()
                    .map(|c| ColumnSchema { name: c.name.clone(), role: c.role })
                    .collect(),
            },
            insight_count: entry.engine.space().len(),
        }
    }
}

async fn upload_dataset(
    State(state): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<DatasetView>)> {
    let name = params.get("name").cloned().unwrap_or_else(|| "dataset".to_string());
    // Mining is CPU-bound; keep it off the async workers.
    let (id, entry) = tokio::task::spawn_blocking(move || state.add_dataset(&name, &body))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    tracing::info!(dataset = %id, insights = entry.engine.space().len(), "dataset ready");
    Ok((StatusCode::CREATED, Json(DatasetView::new(id, &entry))))
}

async fn list_datasets(State(state): State<AppState>) -> ApiResult<Json<Vec<DatasetView>>> {
    let views = state
        .dataset_ids()
        .into_iter()
        .map(|id| state.dataset(&id).map(|entry| DatasetView::new(id, &entry)))
        .collect::<ApiResult<_>>()?;
    Ok(Json(views))
}

async fn get_dataset(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<DatasetView>> {
    let entry = state.dataset(&id)?;
    Ok(Json(DatasetView::new(id, &entry)))
}

async fn get_space(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = state.dataset(&id)?;
    Ok(json_text(entry.engine.space().to_canonical_json()))
}

/// `rootSelector` is either an insight id or query string
/// (`extremum:Year,Horsepower:lowest`) or a selector object.
#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateSession {
    dataset_id: String,
    #[serde(default)]
    root_selector: Option<SelectorInput>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SelectorInput {
    Text(String),
    Structured(RootSelector),
}

impl SelectorInput {
    fn into_selector(self) -> ApiResult<RootSelector> {
        match self {
            Self::Text(text) => RootSelector::parse(&text)
                .ok_or_else(|| ApiError::bad_request(format!("cannot read root selector '{text}'"))),
            Self::Structured(selector) => Ok(selector),
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SessionView<'a> {
    session_id: &'a str,
    dataset_id: &'a str,
    cells: Vec<&'a Cell>,
    tree: TreeSnapshot,
}

impl<'a> SessionView<'a> {
    fn new(entry: &'a SessionEntry) -> Self {
        Self {
            session_id: &entry.id,
            dataset_id: &entry.dataset_id,
            cells: entry.session.notebook().collect(),
            tree: entry.session.tree(),
        }
    }
}

fn session_response(entry: &SessionEntry, status: StatusCode) -> Response {
    (status, Json(SessionView::new(entry))).into_response()
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let request: CreateSession = parse_json(&body)?;
    let selector = request.root_selector.map(SelectorInput::into_selector).transpose()?;
    let entry = state.create_session(&request.dataset_id, selector)?;
    let guard = entry.read().unwrap_or_else(|p| p.into_inner());
    tracing::info!(session = %guard.id, dataset = %guard.dataset_id, "session created");
    Ok(session_response(&guard, StatusCode::CREATED))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    state.with_session(&id, |entry| Ok(session_response(entry, StatusCode::OK)))
}

fn json_text(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn export_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    state.with_session(&id, |entry| Ok(json_text(entry.session.export_json())))
}

async fn get_tree(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    state.with_session(&id, |entry| {
        let tree = entry.session.tree();
        match params.get("format").map(String::as_str) {
            Some("dot") => Ok(([(header::CONTENT_TYPE, "text/vnd.graphviz")], tree.to_dot()).into_response()),
            None | Some("json") => Ok(Json(tree).into_response()),
            Some(other) => Err(ApiError::bad_request(format!("unknown tree format '{other}'"))),
        }
    })
}

async fn get_cell(State(state): State<AppState>, Path((id, cell)): Path<(String, String)>) -> ApiResult<Response> {
    let cell = parse_cell_id(&cell)?;
    state.with_session(&id, |entry| Ok(Json(entry.session.cell(cell)?).into_response()))
}

async fn recommendations(
    State(state): State<AppState>,
    Path((id, cell)): Path<(String, String)>,
) -> ApiResult<Json<Vec<Question>>> {
    let cell = parse_cell_id(&cell)?;
    state.with_session(&id, |entry| Ok(Json(entry.session.recommendations(&entry.engine.engine, cell)?)))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SelectRequest {
    #[serde(default)]
    question_id: Option<String>,
    #[serde(default)]
    action_index: Option<usize>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SelectView<'a> {
    cell: &'a Cell,
    tree: TreeSnapshot,
}

async fn select(
    State(state): State<AppState>,
    Path((id, cell)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Response> {
    let cell_id = parse_cell_id(&cell)?;
    let request: SelectRequest = parse_json(&body)?;
    let event = match (request.question_id, request.action_index) {
        (Some(question_id), None) => Event::SelectQuestion { cell_id, question_id },
        (None, Some(action_index)) => Event::SelectAction { cell_id, action_index },
        _ => return Err(ApiError::bad_request("give exactly one of questionId and actionIndex")),
    };
    state.mutate(&id, event, |entry| {
        let cell = entry.session.cells().last().expect("select creates a cell");
        let view = SelectView { cell, tree: entry.session.tree() };
        (StatusCode::CREATED, Json(view)).into_response()
    })
}

async fn delete_cell(State(state): State<AppState>, Path((id, cell)): Path<(String, String)>) -> ApiResult<Json<TreeSnapshot>> {
    let cell_id = parse_cell_id(&cell)?;
    state.mutate(&id, Event::Delete { cell_id }, |entry| Json(entry.session.tree()))
}

async fn restore(State(state): State<AppState>, Path((id, cell)): Path<(String, String)>) -> ApiResult<Json<TreeSnapshot>> {
    let cell_id = parse_cell_id(&cell)?;
    state.mutate(&id, Event::Restore { cell_id }, |entry| Json(entry.session.tree()))
}

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(state: AppState, static_dir: Option<PathBuf>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
