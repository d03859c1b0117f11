//! Thin async client for the adlmon HTTP service.

mod sse;

use adlmon_core::api::{CreateSession, ErrorBody, Health, MessageReply, PostMessage, RequestList, SessionView};
use adlmon_core::dialogue::{Role, SessionId};
use adlmon_core::pipeline::{BusEvent, Topic};
use futures::Stream;
use reqwest::{RequestBuilder, Response};
use serde::de::DeserializeOwned;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("HTTP {status} {error}: {message}")]
    Api { status: u16, error: String, message: String },
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("decode: {0}")]
    Decode(String),
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Client { base: base.into().trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn send(request: RequestBuilder) -> Result<Response> {
        let response = request.send().await?;
        if response.status().is_success() {
            return Ok(response);
        }
        let status = response.status().as_u16();
        let text = response.text().await?;
        Err(match serde_json::from_str::<ErrorBody>(&text) {
            Ok(body) => ClientError::Api { status, error: body.error, message: body.message },
            Err(_) => ClientError::Api { status, error: "http".into(), message: text },
        })
    }

    async fn json<T: DeserializeOwned>(request: RequestBuilder) -> Result<T> {
        let bytes = Self::send(request).await?.bytes().await?;
        serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()))
    }

    pub async fn health(&self) -> Result<Health> {
        Self::json(self.http.get(self.url("/health"))).await
    }

    pub async fn create_session(&self, role: Role, name: Option<&str>) -> Result<SessionView> {
        let body = CreateSession { role, name: name.map(str::to_string), ts: None };
        Self::json(self.http.post(self.url("/sessions")).json(&body)).await
    }

    pub async fn send_message(&self, session: SessionId, text: &str) -> Result<MessageReply> {
        let body = PostMessage { text: text.to_string(), ts: None };
        Self::json(self.http.post(self.url(&format!("/sessions/{session}/messages"))).json(&body)).await
    }

    pub async fn transcript(&self, session: SessionId) -> Result<SessionView> {
        Self::json(self.http.get(self.url(&format!("/sessions/{session}/transcript")))).await
    }

    /// Transcript as line-delimited JSON.
    pub async fn transcript_jsonl(&self, session: SessionId) -> Result<String> {
        let url = self.url(&format!("/sessions/{session}/transcript?format=jsonl"));
        Ok(Self::send(self.http.get(url)).await?.text().await?)
    }

    pub async fn requests(&self, session: SessionId) -> Result<RequestList> {
        Self::json(self.http.get(self.url(&format!("/requests?session={session}")))).await
    }

    pub async fn events(&self, topic: Topic, from: u64, limit: usize) -> Result<Vec<BusEvent>> {
        let url = self.url(&format!("/events?topic={topic}&from={from}&limit={limit}"));
        Self::json(self.http.get(url)).await
    }

    /// Notification events as they are published. `resume_after` continues
    /// after a previously seen sequence number; otherwise the stream starts
    /// at the moment of subscription.
    pub async fn notifications(&self, resume_after: Option<u64>) -> Result<impl Stream<Item = Result<BusEvent>>> {
        let mut request = self.http.get(self.url("/notifications"));
        if let Some(seq) = resume_after {
            request = request.header("Last-Event-ID", seq.to_string());
        }
        let response = Self::send(request).await?;
        Ok(sse::events(response.bytes_stream()))
    }
}
