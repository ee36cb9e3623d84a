//! JSON over HTTP. Routes are listed in `docs/api.md`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use cplan_core::cbr::Case;
use cplan_core::store::SystemConfig;
use cplan_core::workflow::{ControlScenario, ScenarioCatalog, SessionId};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::Mutex;

use crate::error::{ApiError, ErrorCode};
use crate::service::{
    ApplyRequest, CreateSessionRequest, DecisionRequest, Indicators, ManualRequest,
    SelectionRequest, Service, SituationRequest,
};

#[derive(Clone)]
pub struct AppState {
    service: Arc<Mutex<Service>>,
    token: Option<Arc<str>>,
}

impl AppState {
    pub fn new(service: Service, token: Option<String>) -> Self {
        Self {
            service: Arc::new(Mutex::new(service)),
            token: token.filter(|t| !t.is_empty()).map(Arc::from),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok<T: serde::Serialize>(value: T) -> ApiResult {
    Ok(Json(value).into_response())
}

fn created<T: serde::Serialize>(value: T) -> ApiResult {
    Ok((StatusCode::CREATED, Json(value)).into_response())
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::validation(format!("request body: {e}")))
}

/// Like [`body`], with an empty body meaning the default.
fn optional_body<T: DeserializeOwned + Default>(bytes: &Bytes) -> Result<T, ApiError> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        Ok(T::default())
    } else {
        body(bytes)
    }
}

fn session_id(raw: &str) -> Result<SessionId, ApiError> {
    raw.parse()
        .map(SessionId)
        .map_err(|_| ApiError::not_found(format!("session {raw} not found")))
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/situation", post(submit_situation))
        .route("/sessions/{id}/decision", post(decide))
        .route("/sessions/{id}/manual", post(manual))
        .route("/sessions/{id}/selection", post(select))
        .route("/sessions/{id}/objectives", put(update_objectives))
        .route("/sessions/{id}/apply", post(apply))
        .route("/sessions/{id}/results", post(results))
        .route("/sessions/{id}/close", post(close))
        .route("/sessions/{id}/audit", get(audit))
        .route("/cases", get(list_cases).post(import_cases))
        .route("/config", get(get_config).put(put_config))
        .route(
            "/scenarios",
            get(list_scenarios)
                .post(add_scenario)
                .put(replace_scenarios),
        )
        .route("/scenarios/{id}", put(update_scenario))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token))
        .route("/health", get(health));
    Router::new()
        .nest("/api", api)
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state)
}

async fn require_token(State(state): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(expected) = &state.token {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(expected.as_ref()) {
            return ApiError::new(ErrorCode::Unauthorized, "missing or wrong bearer token")
                .into_response();
        }
    }
    next.run(req).await
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

async fn method_not_allowed() -> Response {
    let mut e = ApiError::validation("method not allowed on this endpoint").into_response();
    *e.status_mut() = StatusCode::METHOD_NOT_ALLOWED;
    e
}

async fn health(State(state): State<AppState>) -> ApiResult {
    ok(state.service.lock().await.health())
}

async fn create_session(State(state): State<AppState>, bytes: Bytes) -> ApiResult {
    let req: CreateSessionRequest = optional_body(&bytes)?;
    created(state.service.lock().await.create_session(req)?)
}

async fn list_sessions(State(state): State<AppState>) -> ApiResult {
    ok(state.service.lock().await.sessions())
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    ok(state.service.lock().await.session(session_id(&id)?)?)
}

async fn submit_situation(
    State(state): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult {
    let id = session_id(&id)?;
    let req: SituationRequest = body(&bytes)?;
    ok(state.service.lock().await.submit_situation(id, req)?)
}

async fn decide(State(state): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let id = session_id(&id)?;
    let req: DecisionRequest = body(&bytes)?;
    ok(state.service.lock().await.decide(id, req)?)
}

async fn manual(State(state): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let id = session_id(&id)?;
    let req: ManualRequest = body(&bytes)?;
    ok(state.service.lock().await.manual(id, req)?)
}

async fn select(State(state): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let id = session_id(&id)?;
    let req: SelectionRequest = body(&bytes)?;
    ok(state.service.lock().await.select(id, req)?)
}

async fn update_objectives(
    State(state): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult {
    let id = session_id(&id)?;
    let req: Indicators = body(&bytes)?;
    ok(state.service.lock().await.update_objectives(id, req)?)
}

async fn apply(State(state): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let id = session_id(&id)?;
    let req: ApplyRequest = optional_body(&bytes)?;
    ok(state.service.lock().await.apply(id, req)?)
}

async fn results(State(state): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let id = session_id(&id)?;
    let req: Indicators = body(&bytes)?;
    ok(state.service.lock().await.record_results(id, req)?)
}

async fn close(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let id = session_id(&id)?;
    ok(state.service.lock().await.close(id)?)
}

async fn audit(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let id = session_id(&id)?;
    ok(state.service.lock().await.audit(id)?)
}

async fn list_cases(State(state): State<AppState>) -> ApiResult {
    ok(state.service.lock().await.cases())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    Many(Vec<T>),
    One(T),
}

async fn import_cases(State(state): State<AppState>, bytes: Bytes) -> ApiResult {
    let cases: Vec<Case> = match body::<OneOrMany<Case>>(&bytes)? {
        OneOrMany::Many(v) => v,
        OneOrMany::One(c) => vec![c],
    };
    let ids = state.service.lock().await.import_cases(cases)?;
    created(json!({ "case_ids": ids }))
}

async fn get_config(State(state): State<AppState>) -> ApiResult {
    ok(state.service.lock().await.config())
}

async fn put_config(State(state): State<AppState>, bytes: Bytes) -> ApiResult {
    let config: SystemConfig = body(&bytes)?;
    ok(state.service.lock().await.set_config(config)?)
}

async fn list_scenarios(State(state): State<AppState>) -> ApiResult {
    ok(state.service.lock().await.scenarios())
}

async fn add_scenario(State(state): State<AppState>, bytes: Bytes) -> ApiResult {
    let scenario: ControlScenario = body(&bytes)?;
    created(state.service.lock().await.add_scenario(scenario)?)
}

async fn replace_scenarios(State(state): State<AppState>, bytes: Bytes) -> ApiResult {
    let catalog: ScenarioCatalog = body(&bytes)?;
    ok(state.service.lock().await.replace_scenarios(catalog)?)
}

async fn update_scenario(
    State(state): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult {
    let scenario: ControlScenario = body(&bytes)?;
    if scenario.id.as_str() != id {
        return Err(ApiError::field(
            "id",
            format!("body id `{}` differs from path `{id}`", scenario.id),
        ));
    }
    ok(state.service.lock().await.update_scenario(scenario)?)
}
