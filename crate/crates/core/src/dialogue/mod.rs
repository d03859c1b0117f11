//! Template dialogue between a caregiver and the monitored older adult.
//!
//! The engine greets, explains the latest activity or abnormal event, stores
//! caregiver follow-up questions and asks them when the older adult is
//! resting. Declined answers never reach the caregiver.

mod config;
mod intent;
mod machine;
mod render;

use std::fmt;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{IntentSet, Templates, VerbForms, VerbTable, CONFIG_FORMAT_VERSION, MIN_KEYWORDS};
pub use intent::{classify_intent, Intent};
pub use machine::{
    extract_question, second_person, AbnormalEvent, ActivityEvent, DialogueEngine, DialogueEvent,
    Session, SideEffect, StepOutcome,
};
pub use render::{render_abnormal_event, render_activity_event};

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("dialogue config: {0}")]
    Config(String),
    #[error("empty template slot `{0}`")]
    MissingSlot(&'static str),
    #[error("verdict has no flagged feature")]
    NotAbnormal,
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("request {id} cannot move from {from} to {to}")]
    RequestStatus { id: u64, from: RequestStatus, to: RequestStatus },
    #[error("empty utterance")]
    EmptyUtterance,
}

pub type SessionId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Caregiver,
    OlderAdult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    System,
    Caregiver,
    OlderAdult,
}

impl From<Role> for Speaker {
    fn from(role: Role) -> Self {
        match role {
            Role::Caregiver => Speaker::Caregiver,
            Role::OlderAdult => Speaker::OlderAdult,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DialogueState {
    Init,
    #[serde(rename = "Explain.ActivityEvents")]
    ExplainActivityEvents,
    #[serde(rename = "Explain.AbnormalEvents")]
    ExplainAbnormalEvents,
    #[serde(rename = "FollowUp.StoreRequest")]
    StoreRequest,
    #[serde(rename = "FollowUp.PromptToConfirm")]
    PromptToConfirm,
}

impl DialogueState {
    pub const ALL: [DialogueState; 5] = [
        DialogueState::Init,
        DialogueState::ExplainActivityEvents,
        DialogueState::ExplainAbnormalEvents,
        DialogueState::StoreRequest,
        DialogueState::PromptToConfirm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DialogueState::Init => "Init",
            DialogueState::ExplainActivityEvents => "Explain.ActivityEvents",
            DialogueState::ExplainAbnormalEvents => "Explain.AbnormalEvents",
            DialogueState::StoreRequest => "FollowUp.StoreRequest",
            DialogueState::PromptToConfirm => "FollowUp.PromptToConfirm",
        }
    }

    /// Declared edges. A pending prompt can only be answered (back to
    /// `Init`) or repeated.
    pub fn can_move_to(self, to: DialogueState) -> bool {
        match self {
            DialogueState::PromptToConfirm => {
                matches!(to, DialogueState::PromptToConfirm | DialogueState::Init)
            }
            _ => true,
        }
    }
}

impl fmt::Display for DialogueState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueMessage {
    pub session_id: SessionId,
    pub speaker: Speaker,
    pub text: String,
    pub timestamp: NaiveDateTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestStatus {
    Stored,
    Prompted,
    Answered,
    Declined,
}

impl RequestStatus {
    pub fn can_move_to(self, to: RequestStatus) -> bool {
        matches!(
            (self, to),
            (RequestStatus::Stored, RequestStatus::Prompted)
                | (RequestStatus::Prompted, RequestStatus::Answered)
                | (RequestStatus::Prompted, RequestStatus::Declined)
        )
    }
}

impl fmt::Display for RequestStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RequestStatus::Stored => "stored",
            RequestStatus::Prompted => "prompted",
            RequestStatus::Answered => "answered",
            RequestStatus::Declined => "declined",
        })
    }
}

/// A caregiver question waiting to be asked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingRequest {
    pub id: u64,
    pub from_session: SessionId,
    pub target_user: String,
    /// Third-person clause, e.g. "she has a dietary problem".
    pub question_text: String,
    /// Abnormal activity on record when the request was made.
    pub context: Option<crate::ActivityLabel>,
    pub created_at: NaiveDateTime,
    pub status: RequestStatus,
    /// Older-adult answer; never filled for a declined request.
    pub answer: Option<String>,
}

impl PendingRequest {
    pub(crate) fn advance(&mut self, to: RequestStatus) -> Result<(), DialogueError> {
        if !self.status.can_move_to(to) {
            return Err(DialogueError::RequestStatus { id: self.id, from: self.status, to });
        }
        self.status = to;
        Ok(())
    }
}

/// Line-delimited JSON, one message per line.
pub fn transcript_to_jsonl(messages: &[DialogueMessage]) -> String {
    let mut out = String::new();
    for m in messages {
        out.push_str(&serde_json::to_string(m).expect("message serializes"));
        out.push('\n');
    }
    out
}
