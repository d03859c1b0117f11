use std::convert::Infallible;

use adlmon_core::api::{CreateSession, Health, MessageReply, PostMessage, RequestList, SessionView};
use adlmon_core::dialogue::{transcript_to_jsonl, DialogueEvent, Role, SessionId, Speaker};
use adlmon_core::pipeline::{BusEvent, Topic};
use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDateTime;
use futures::Stream;
use serde::Deserialize;

use crate::{ApiError, AppState};

const DEFAULT_EVENT_LIMIT: usize = 1000;
const MAX_EVENT_LIMIT: usize = 10_000;

pub(crate) fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/notifications", get(notifications))
        .route("/events", get(events))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/requests", get(requests))
        .with_state(state)
}

fn now() -> NaiveDateTime {
    chrono::Utc::now().naive_utc()
}

fn schema<E: std::fmt::Display>(e: E) -> ApiError {
    ApiError::Schema(e.to_string())
}

async fn health(State(s): State<AppState>) -> Json<Health> {
    let events = Topic::ALL.iter().map(|&t| (t.name().to_string(), s.bus().len(t))).collect();
    Json(Health {
        status: "ok".into(),
        model_digest: s.artifacts.model_digest().to_string(),
        bundle_digest: s.bundle_digest.to_string(),
        training_fingerprint: s.artifacts.model.fingerprint.clone(),
        subject: s.hub.read(|e| e.subject().to_string()),
        events,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FromQuery {
    from: Option<u64>,
}

async fn notifications(
    State(s): State<AppState>,
    headers: HeaderMap,
    query: Result<Query<FromQuery>, QueryRejection>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let Query(query) = query.map_err(schema)?;
    let resume = match headers.get("last-event-id") {
        Some(v) => {
            let id: u64 = v.to_str().ok().and_then(|v| v.trim().parse().ok()).ok_or_else(|| {
                ApiError::Schema("Last-Event-ID must be a notification sequence number".into())
            })?;
            Some(id + 1)
        }
        None => None,
    };
    let from = resume.or(query.from).unwrap_or_else(|| s.bus().len(Topic::Notification));
    let sub = s.bus().subscribe(Topic::Notification, from);
    let stream = futures::stream::unfold(sub, |mut sub| async move {
        let event = sub.next().await;
        let sse = Event::default().id(event.seq.to_string()).event(Topic::Notification.name()).data(event.to_json());
        Some((Ok(sse), sub))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventsQuery {
    topic: String,
    from: Option<u64>,
    limit: Option<usize>,
}

async fn events(
    State(s): State<AppState>,
    query: Result<Query<EventsQuery>, QueryRejection>,
) -> Result<Json<Vec<BusEvent>>, ApiError> {
    let Query(q) = query.map_err(schema)?;
    let topic: Topic = q.topic.parse()?;
    let limit = q.limit.unwrap_or(DEFAULT_EVENT_LIMIT).min(MAX_EVENT_LIMIT);
    let events = s.bus().events(topic, q.from.unwrap_or(0), limit);
    Ok(Json(events.iter().map(|e| (**e).clone()).collect()))
}

fn view(s: &AppState, id: SessionId) -> Result<SessionView, ApiError> {
    s.hub.read(|e| {
        let session = e.session(id).ok_or(ApiError::UnknownSession(id))?;
        Ok(SessionView {
            session_id: id,
            role: session.role,
            name: session.name.clone(),
            state: session.state,
            messages: session.transcript.clone(),
        })
    })
}

async fn create_session(
    State(s): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let Json(body) = body.map_err(schema)?;
    let name = body.name.unwrap_or_default();
    let (id, _) = s.hub.open_session(body.role, &name, body.ts.unwrap_or_else(now))?;
    Ok((StatusCode::CREATED, Json(view(&s, id)?)))
}

fn session_id(path: Result<Path<SessionId>, PathRejection>) -> Result<SessionId, ApiError> {
    path.map(|Path(id)| id).map_err(schema)
}

async fn post_message(
    State(s): State<AppState>,
    path: Result<Path<SessionId>, PathRejection>,
    body: Result<Json<PostMessage>, JsonRejection>,
) -> Result<Json<MessageReply>, ApiError> {
    let id = session_id(path)?;
    let Json(body) = body.map_err(schema)?;
    let outcome = s.hub.step(DialogueEvent::Utterance { session: id, text: body.text }, body.ts.unwrap_or_else(now))?;
    let replies = outcome
        .messages
        .into_iter()
        .filter(|m| m.session_id == id && m.speaker == Speaker::System)
        .collect();
    let state = view(&s, id)?.state;
    Ok(Json(MessageReply { session_id: id, state, replies }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TranscriptQuery {
    format: Option<String>,
}

async fn transcript(
    State(s): State<AppState>,
    path: Result<Path<SessionId>, PathRejection>,
    query: Result<Query<TranscriptQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let id = session_id(path)?;
    let Query(q) = query.map_err(schema)?;
    let view = view(&s, id)?;
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(view).into_response()),
        Some("jsonl") => Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], transcript_to_jsonl(&view.messages))
            .into_response()),
        Some(other) => Err(ApiError::Schema(format!("unknown transcript format `{other}`"))),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequestsQuery {
    session: SessionId,
}

async fn requests(
    State(s): State<AppState>,
    query: Result<Query<RequestsQuery>, QueryRejection>,
) -> Result<Json<RequestList>, ApiError> {
    let Query(q) = query.map_err(schema)?;
    s.hub.read(|e| {
        let session = e.session(q.session).ok_or(ApiError::UnknownSession(q.session))?;
        if session.role != Role::Caregiver {
            return Err(ApiError::Forbidden("only caregiver sessions can read the request queue".into()));
        }
        let requests = e.requests().to_vec();
        Ok(Json(RequestList { requests }))
    })
}
