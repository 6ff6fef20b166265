//! JSON-over-HTTP routes and the server-sent event stream.

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use scires_core::recommender::{CriterionWeights, HardConstraints};
use scires_core::response::ResourceUpdate;
use serde::Serialize;
use tokio::sync::broadcast::error::RecvError;

use crate::error::{AppError, ErrorCode};
use crate::service::{CreateSessionRequest, DisruptionRequest, PhaseFilter, ScenarioSet, SessionService};

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status = match self.code {
            ErrorCode::InvalidInput => StatusCode::BAD_REQUEST,
            ErrorCode::ValidationError => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::VersionConflict => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, AppError>;
type Body<T> = Result<Json<T>, JsonRejection>;
type Params = Result<Query<HashMap<String, String>>, QueryRejection>;

fn body<T>(payload: Body<T>) -> Result<T, AppError> {
    payload.map(|Json(v)| v).map_err(|e| AppError::input(e.body_text()))
}

fn param<T: std::str::FromStr<Err = AppError> + Default>(params: Params, key: &str) -> Result<T, AppError> {
    let Query(map) = params.map_err(|e| AppError::input(e.body_text()))?;
    map.get(key).map(|v| v.parse()).unwrap_or_else(|| Ok(T::default()))
}

async fn create_session(State(svc): State<Arc<SessionService>>, payload: Body<CreateSessionRequest>) -> Response {
    let result = match payload {
        Ok(Json(req)) => svc.create_session(req),
        // An empty body means "use the service defaults".
        Err(JsonRejection::MissingJsonContentType(_)) => svc.create_session(CreateSessionRequest::default()),
        Err(e) => Err(AppError::input(e.body_text())),
    };
    match result {
        Ok(view) => (StatusCode::CREATED, Json(view)).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn get_session(State(svc): State<Arc<SessionService>>, Path(id): Path<String>) -> ApiResult<impl Serialize> {
    svc.get_session(&id).map(Json)
}

async fn get_log(State(svc): State<Arc<SessionService>>, Path(id): Path<String>) -> ApiResult<impl Serialize> {
    svc.session_log(&id).map(Json)
}

async fn create_disruption(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
    payload: Body<DisruptionRequest>,
) -> ApiResult<impl Serialize> {
    svc.create_disruption(&id, body(payload)?).map(Json)
}

async fn recommendations(
    State(svc): State<Arc<SessionService>>,
    Path((id, eid)): Path<(String, String)>,
    params: Params,
) -> ApiResult<impl Serialize> {
    let phase: PhaseFilter = param(params, "phase")?;
    svc.recommendations(&id, &eid, phase).map(Json)
}

async fn timeline(
    State(svc): State<Arc<SessionService>>,
    Path((id, eid)): Path<(String, String)>,
    params: Params,
) -> ApiResult<impl Serialize> {
    let scenarios: ScenarioSet = param(params, "scenarios")?;
    svc.timeline(&id, &eid, scenarios).map(Json)
}

async fn put_weights(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
    payload: Body<CriterionWeights>,
) -> ApiResult<impl Serialize> {
    svc.put_weights(&id, body(payload)?).map(Json)
}

async fn put_constraints(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
    payload: Body<HardConstraints>,
) -> ApiResult<impl Serialize> {
    svc.put_constraints(&id, body(payload)?).map(Json)
}

async fn post_update(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
    payload: Body<ResourceUpdate>,
) -> ApiResult<impl Serialize> {
    svc.post_update(&id, body(payload)?).map(Json)
}

async fn stream_events(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, AppError> {
    let rx = svc.subscribe(&id)?;
    let events = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(ev) => {
                    let event = Event::default()
                        .event(ev.kind)
                        .json_data(&ev)
                        .expect("stream events serialize");
                    return Some((Ok(event), rx));
                }
                // A slow client misses intermediate events; the latest
                // version is always re-sent by the next one.
                Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::new().interval(Duration::from_secs(15))))
}

async fn not_found() -> AppError {
    AppError::not_found("no such route")
}

async fn method_not_allowed() -> Response {
    let mut resp = AppError::input("method not allowed on this route").into_response();
    *resp.status_mut() = StatusCode::METHOD_NOT_ALLOWED;
    resp
}

pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/log", get(get_log))
        .route("/sessions/{id}/disruptions", post(create_disruption))
        .route("/sessions/{id}/disruptions/{eid}/recommendations", get(recommendations))
        .route("/sessions/{id}/disruptions/{eid}/timeline", get(timeline))
        .route("/sessions/{id}/weights", put(put_weights))
        .route("/sessions/{id}/constraints", put(put_constraints))
        .route("/sessions/{id}/updates", post(post_update))
        .route("/sessions/{id}/stream", get(stream_events))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(service)
}
