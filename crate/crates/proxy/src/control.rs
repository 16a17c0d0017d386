//! Control API: JSON over HTTP for the consent UI.

use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dp_core::policy::PreferenceProfile;
use dp_core::rdf::Iri;
use dp_core::{PurposeTaxonomy, UserChoice};
use futures_util::Stream;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast::error::RecvError;
use tower_http::services::ServeDir;

use crate::log::LogError;
use crate::state::{ConsentState, PreferencesError, ResolveError};

#[derive(Clone)]
struct Ctx {
    state: Arc<ConsentState>,
    ca_pem: Option<String>,
}

fn error(status: StatusCode, msg: impl ToString) -> Response {
    (status, Json(json!({ "error": msg.to_string() }))).into_response()
}

/// Routes under `/api`; static files from `ui_dir` everywhere else.
pub fn router(state: Arc<ConsentState>, ui_dir: Option<PathBuf>, ca_pem: Option<String>) -> Router {
    let api = Router::new()
        .route(
            "/api/preferences",
            get(get_preferences).put(put_preferences),
        )
        .route("/api/pending", get(list_pending))
        .route("/api/pending/{id}/resolve", post(resolve))
        .route("/api/log", get(log))
        .route("/api/log/verify", get(verify))
        .route("/api/taxonomy", get(taxonomy))
        .route("/api/events", get(events))
        .route("/api/ca.pem", get(ca))
        .with_state(Ctx { state, ca_pem });
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn get_preferences(State(c): State<Ctx>) -> Json<PreferenceProfile> {
    Json(c.state.profile())
}

async fn put_preferences(State(c): State<Ctx>, Json(p): Json<PreferenceProfile>) -> Response {
    let state = c.state.clone();
    match tokio::task::spawn_blocking(move || state.set_profile(p))
        .await
        .expect("no panic")
    {
        Ok(p) => Json(p).into_response(),
        Err(PreferencesError::Invalid(e)) => error(StatusCode::UNPROCESSABLE_ENTITY, e),
        Err(e @ PreferencesError::Save(_)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn list_pending(State(c): State<Ctx>) -> Response {
    Json(c.state.pending_items()).into_response()
}

#[derive(Deserialize)]
struct ResolveBody {
    choices: Vec<UserChoice>,
}

async fn resolve(
    State(c): State<Ctx>,
    Path(id): Path<String>,
    Json(body): Json<ResolveBody>,
) -> Response {
    let state = c.state.clone();
    let result = tokio::task::spawn_blocking(move || state.resolve(&id, &body.choices))
        .await
        .expect("no panic");
    match result {
        Ok(d) => Json(d).into_response(),
        Err(e @ ResolveError::NotFound(_)) => error(StatusCode::NOT_FOUND, e),
        Err(e @ ResolveError::Conflict(..)) => error(StatusCode::CONFLICT, e),
        Err(e @ ResolveError::Invalid(_)) => error(StatusCode::UNPROCESSABLE_ENTITY, e),
        Err(e @ ResolveError::Log(_)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

#[derive(Deserialize)]
struct LogQuery {
    origin: Option<String>,
    limit: Option<usize>,
}

async fn log(State(c): State<Ctx>, Query(q): Query<LogQuery>) -> Response {
    let state = c.state.clone();
    match tokio::task::spawn_blocking(move || state.records())
        .await
        .expect("no panic")
    {
        Ok(records) => {
            let out: Vec<_> = records
                .into_iter()
                .rev()
                .filter(|r| q.origin.as_ref().is_none_or(|o| &r.origin == o))
                .take(q.limit.unwrap_or(usize::MAX))
                .collect();
            Json(out).into_response()
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn verify(State(c): State<Ctx>) -> Response {
    let state = c.state.clone();
    match tokio::task::spawn_blocking(move || state.verify_log())
        .await
        .expect("no panic")
    {
        Ok(n) => Json(json!({ "ok": true, "records": n })).into_response(),
        Err(LogError::Broken(b)) => {
            Json(json!({ "ok": false, "index": b.index, "reason": b.reason })).into_response()
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

#[derive(Serialize)]
struct PurposeNode {
    iri: Iri,
    label: Option<String>,
    definition: Option<String>,
    children: Vec<PurposeNode>,
}

fn purpose_tree(t: &PurposeTaxonomy, iri: &Iri) -> PurposeNode {
    PurposeNode {
        iri: iri.clone(),
        label: t.label(iri).map(str::to_string),
        definition: t.definition(iri).map(str::to_string),
        children: t
            .children(iri)
            .into_iter()
            .map(|c| purpose_tree(t, c))
            .collect(),
    }
}

async fn taxonomy(State(c): State<Ctx>) -> Json<Vec<PurposeNode>> {
    let t = c.state.taxonomy();
    Json(t.roots().into_iter().map(|r| purpose_tree(t, r)).collect())
}

async fn events(State(c): State<Ctx>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = c.state.subscribe();
    let stream = futures_util::stream::unfold(rx, |mut rx| async move {
        let event = match rx.recv().await {
            Ok(e) => Event::default()
                .event(e.name())
                .json_data(&e)
                .expect("events serialize"),
            // a slow client missed events; it refetches /api/pending on "lagged"
            Err(RecvError::Lagged(n)) => Event::default().event("lagged").data(n.to_string()),
            Err(RecvError::Closed) => return None,
        };
        Some((Ok(event), rx))
    });
    Sse::new(stream).keep_alive(KeepAlive::new().interval(Duration::from_secs(15)))
}

async fn ca(State(c): State<Ctx>) -> Response {
    match c.ca_pem {
        Some(pem) => ([(header::CONTENT_TYPE, "application/x-pem-file")], pem).into_response(),
        None => error(StatusCode::NOT_FOUND, "interception is disabled"),
    }
}
