use std::fmt;

use serde::{Deserialize, Serialize};

use super::IntentSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    Greet,
    ExplainActivity,
    ExplainAbnormal,
    RequestFollowup,
    ConfirmYes,
    ConfirmNo,
    DeclineShare,
    Unknown,
}

impl Intent {
    /// Every intent except `Unknown`.
    pub const NAMED: [Intent; 7] = [
        Intent::Greet,
        Intent::ExplainActivity,
        Intent::ExplainAbnormal,
        Intent::RequestFollowup,
        Intent::ConfirmYes,
        Intent::ConfirmNo,
        Intent::DeclineShare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Intent::Greet => "greet",
            Intent::ExplainActivity => "explain_activity",
            Intent::ExplainAbnormal => "explain_abnormal",
            Intent::RequestFollowup => "request_followup",
            Intent::ConfirmYes => "confirm_yes",
            Intent::ConfirmNo => "confirm_no",
            Intent::DeclineShare => "decline_share",
            Intent::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub(crate) fn tokenize(utterance: &str) -> impl Iterator<Item = String> + '_ {
    utterance
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Keyword-count matcher: the intent with the most hits wins; no hits or a
/// tie gives `Unknown`.
pub fn classify_intent(utterance: &str, intents: &IntentSet) -> Intent {
    let mut hits = [0usize; Intent::NAMED.len()];
    for token in tokenize(utterance) {
        if let Some(intent) = intents.intent_of(&token) {
            hits[intent as usize] += 1;
        }
    }
    let best = hits.iter().copied().max().unwrap_or(0);
    if best == 0 || hits.iter().filter(|&&h| h == best).count() > 1 {
        return Intent::Unknown;
    }
    Intent::NAMED[hits.iter().position(|&h| h == best).expect("max exists")]
}
