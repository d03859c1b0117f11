//! Publish-subscribe bus with an append-only log, and the runner that turns
//! a slice stream into recognized activities, anomalies, notifications and
//! dialogue traffic.

mod bus;
mod hub;
mod runner;
mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

pub use bus::{Bus, Subscription, DEFAULT_LAG_LIMIT};
pub use hub::DialogueHub;
pub use runner::{Pipeline, DEFAULT_LAG};
pub use store::{read_index, read_log, LogReplay, INDEX_FILE, LOG_FILE, LOG_FORMAT_VERSION};

use crate::anomaly::{ActivitySegment, AnomalyError, AnomalyVerdict, ContextFeatures, Explanation, Feature};
use crate::dialogue::{DialogueError, DialogueMessage, PendingRequest};
use crate::hmm::HmmError;
use crate::ingest::TimeSlice;
use crate::label::ActivityLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    TimeSlice,
    ActivityRecognized,
    SegmentCompleted,
    AbnormalDetected,
    Notification,
    DialogueMessage,
    RequestStored,
    RequestAnswered,
}

impl Topic {
    pub const ALL: [Topic; 8] = [
        Topic::TimeSlice,
        Topic::ActivityRecognized,
        Topic::SegmentCompleted,
        Topic::AbnormalDetected,
        Topic::Notification,
        Topic::DialogueMessage,
        Topic::RequestStored,
        Topic::RequestAnswered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Topic::TimeSlice => "time_slice",
            Topic::ActivityRecognized => "activity_recognized",
            Topic::SegmentCompleted => "segment_completed",
            Topic::AbnormalDetected => "abnormal_detected",
            Topic::Notification => "notification",
            Topic::DialogueMessage => "dialogue_message",
            Topic::RequestStored => "request_stored",
            Topic::RequestAnswered => "request_answered",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topic {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topic::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| PipelineError::UnknownTopic(s.to_string()))
    }
}

/// One committed slice label from the online decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecognizedSlice {
    pub date: NaiveDate,
    pub t: usize,
    pub wallclock: NaiveDateTime,
    pub label: ActivityLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub segment: ActivitySegment,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
    pub features: ContextFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbnormalRecord {
    pub segment: ActivitySegment,
    pub start: NaiveDateTime,
    pub features: ContextFeatures,
    /// Interval / threshold rule verdict; decides whether an event is abnormal.
    pub verdict: AnomalyVerdict,
    /// What each feature tree predicts for this segment.
    pub detector_flags: BTreeMap<Feature, bool>,
    /// Tree decision path for every flagged feature.
    pub explanations: BTreeMap<Feature, Explanation>,
    /// Caregiver-facing sentence.
    pub text: String,
}

/// Brief alert for the caregiver feed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Notification {
    pub activity: ActivityLabel,
    pub flags: Vec<Feature>,
    pub wallclock: NaiveDateTime,
    /// Number of flagged features.
    pub severity: usize,
    pub style: String,
    pub summary: String,
}

pub const HIGHLIGHT_STYLE: &str = "highlight";

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    TimeSlice(TimeSlice),
    ActivityRecognized(RecognizedSlice),
    SegmentCompleted(SegmentRecord),
    AbnormalDetected(Box<AbnormalRecord>),
    Notification(Notification),
    DialogueMessage(DialogueMessage),
    RequestStored(PendingRequest),
    RequestAnswered(PendingRequest),
}

impl Payload {
    pub fn topic(&self) -> Topic {
        match self {
            Payload::TimeSlice(_) => Topic::TimeSlice,
            Payload::ActivityRecognized(_) => Topic::ActivityRecognized,
            Payload::SegmentCompleted(_) => Topic::SegmentCompleted,
            Payload::AbnormalDetected(_) => Topic::AbnormalDetected,
            Payload::Notification(_) => Topic::Notification,
            Payload::DialogueMessage(_) => Topic::DialogueMessage,
            Payload::RequestStored(_) => Topic::RequestStored,
            Payload::RequestAnswered(_) => Topic::RequestAnswered,
        }
    }

    fn decode(topic: Topic, value: serde_json::Value) -> Result<Self, serde_json::Error> {
        use serde_json::from_value;
        Ok(match topic {
            Topic::TimeSlice => Payload::TimeSlice(from_value(value)?),
            Topic::ActivityRecognized => Payload::ActivityRecognized(from_value(value)?),
            Topic::SegmentCompleted => Payload::SegmentCompleted(from_value(value)?),
            Topic::AbnormalDetected => Payload::AbnormalDetected(from_value(value)?),
            Topic::Notification => Payload::Notification(from_value(value)?),
            Topic::DialogueMessage => Payload::DialogueMessage(from_value(value)?),
            Topic::RequestStored => Payload::RequestStored(from_value(value)?),
            Topic::RequestAnswered => Payload::RequestAnswered(from_value(value)?),
        })
    }
}

/// A published event; `seq` counts from 0 within its topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEvent")]
pub struct BusEvent {
    pub topic: Topic,
    pub seq: u64,
    pub ts: NaiveDateTime,
    pub payload: Payload,
}

#[derive(Deserialize)]
struct RawEvent {
    topic: Topic,
    seq: u64,
    ts: NaiveDateTime,
    payload: serde_json::Value,
}

impl TryFrom<RawEvent> for BusEvent {
    type Error = serde_json::Error;

    fn try_from(raw: RawEvent) -> Result<Self, Self::Error> {
        Ok(BusEvent { topic: raw.topic, seq: raw.seq, ts: raw.ts, payload: Payload::decode(raw.topic, raw.payload)? })
    }
}

impl BusEvent {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("unknown topic `{0}`")]
    UnknownTopic(String),
    #[error("payload for {found} published on topic {topic}")]
    SchemaMismatch { topic: Topic, found: Topic },
    #[error("event log: {0}")]
    Io(#[from] std::io::Error),
    #[error("event log is not a version {LOG_FORMAT_VERSION} adlmon log: {0}")]
    BadHeader(String),
    #[error("event log record at byte {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error(transparent)]
    Anomaly(#[from] AnomalyError),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
}
