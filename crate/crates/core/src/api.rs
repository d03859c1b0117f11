//! JSON bodies of the HTTP service, shared by server and client.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::dialogue::{DialogueMessage, DialogueState, PendingRequest, Role, SessionId};

/// `GET /health`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    /// SHA-256 of the model JSON.
    pub model_digest: String,
    /// SHA-256 of the anomaly bundle JSON.
    pub bundle_digest: String,
    /// Fingerprint of the model's training data.
    pub training_fingerprint: String,
    pub subject: String,
    /// Events stored per topic.
    pub events: BTreeMap<String, u64>,
}

/// `POST /sessions`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub role: Role,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub ts: Option<NaiveDateTime>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: SessionId,
    pub role: Role,
    pub name: String,
    pub state: DialogueState,
    pub messages: Vec<DialogueMessage>,
}

/// `POST /sessions/{id}/messages`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostMessage {
    pub text: String,
    #[serde(default)]
    pub ts: Option<NaiveDateTime>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageReply {
    pub session_id: SessionId,
    pub state: DialogueState,
    /// System replies addressed to this session.
    pub replies: Vec<DialogueMessage>,
}

/// `GET /requests`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestList {
    pub requests: Vec<PendingRequest>,
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}
