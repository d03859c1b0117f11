use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The eleven activities of daily living annotated in the Ordóñez recordings.
///
/// Discriminant order is the HMM state order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActivityLabel {
    Leaving,
    Toileting,
    Showering,
    Sleeping,
    Breakfast,
    Dinner,
    IdleUnlabeled,
    Lunch,
    Snack,
    SpareTimeTV,
    Grooming,
}

impl ActivityLabel {
    pub const COUNT: usize = 11;

    pub const ALL: [ActivityLabel; Self::COUNT] = [
        ActivityLabel::Leaving,
        ActivityLabel::Toileting,
        ActivityLabel::Showering,
        ActivityLabel::Sleeping,
        ActivityLabel::Breakfast,
        ActivityLabel::Dinner,
        ActivityLabel::IdleUnlabeled,
        ActivityLabel::Lunch,
        ActivityLabel::Snack,
        ActivityLabel::SpareTimeTV,
        ActivityLabel::Grooming,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivityLabel::Leaving => "Leaving",
            ActivityLabel::Toileting => "Toileting",
            ActivityLabel::Showering => "Showering",
            ActivityLabel::Sleeping => "Sleeping",
            ActivityLabel::Breakfast => "Breakfast",
            ActivityLabel::Dinner => "Dinner",
            ActivityLabel::IdleUnlabeled => "IdleUnlabeled",
            ActivityLabel::Lunch => "Lunch",
            ActivityLabel::Snack => "Snack",
            ActivityLabel::SpareTimeTV => "SpareTimeTV",
            ActivityLabel::Grooming => "Grooming",
        }
    }

    /// Spelling used in the dataset's activity files.
    pub fn dataset_name(self) -> &'static str {
        match self {
            ActivityLabel::SpareTimeTV => "Spare_Time/TV",
            ActivityLabel::IdleUnlabeled => "Idle",
            other => other.name(),
        }
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown activity label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for ActivityLabel {
    type Err = UnknownLabel;

    /// Accepts canonical names and the dataset spellings (`Spare_Time/TV`, `Idle`, ...),
    /// ignoring case and punctuation.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        let label = match key.as_str() {
            "leaving" => ActivityLabel::Leaving,
            "toileting" => ActivityLabel::Toileting,
            "showering" => ActivityLabel::Showering,
            "sleeping" => ActivityLabel::Sleeping,
            "breakfast" => ActivityLabel::Breakfast,
            "dinner" => ActivityLabel::Dinner,
            "idle" | "idleunlabeled" | "unlabeled" => ActivityLabel::IdleUnlabeled,
            "lunch" => ActivityLabel::Lunch,
            "snack" => ActivityLabel::Snack,
            "sparetimetv" | "sparetime" => ActivityLabel::SpareTimeTV,
            "grooming" => ActivityLabel::Grooming,
            _ => return Err(UnknownLabel(s.to_string())),
        };
        Ok(label)
    }
}
