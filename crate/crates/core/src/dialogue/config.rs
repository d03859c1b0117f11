use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DialogueError, Intent};
use crate::label::ActivityLabel;

const DEFAULT_INTENTS: &str = include_str!("../../config/intents.toml");
const DEFAULT_VERBS: &str = include_str!("../../config/verbs.toml");
pub const CONFIG_FORMAT_VERSION: u32 = 1;

/// Minimum keywords per named intent.
pub const MIN_KEYWORDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct IntentFile {
    format_version: u32,
    intents: BTreeMap<Intent, Vec<String>>,
}

/// Validated keyword lists, one per named intent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntentSet {
    keywords: BTreeMap<Intent, Vec<String>>,
    lookup: HashMap<String, Intent>,
}

impl IntentSet {
    pub fn new(keywords: BTreeMap<Intent, Vec<String>>) -> Result<Self, DialogueError> {
        let mut lookup = HashMap::new();
        for intent in Intent::NAMED {
            let words = keywords
                .get(&intent)
                .ok_or_else(|| DialogueError::Config(format!("intent {intent} has no keywords")))?;
            if words.len() < MIN_KEYWORDS {
                return Err(DialogueError::Config(format!(
                    "intent {intent} has {} keywords, needs at least {MIN_KEYWORDS}",
                    words.len()
                )));
            }
        }
        for (&intent, words) in &keywords {
            if intent == Intent::Unknown {
                return Err(DialogueError::Config("`unknown` cannot have keywords".into()));
            }
            for word in words {
                let word = word.to_lowercase();
                if let Some(other) = lookup.insert(word.clone(), intent) {
                    if other != intent {
                        return Err(DialogueError::Config(format!(
                            "keyword `{word}` is shared by {other} and {intent}"
                        )));
                    }
                }
            }
        }
        Ok(IntentSet { keywords, lookup })
    }

    pub fn from_toml_str(text: &str) -> Result<Self, DialogueError> {
        let file: IntentFile = toml::from_str(text).map_err(|e| DialogueError::Config(e.to_string()))?;
        if file.format_version != CONFIG_FORMAT_VERSION {
            return Err(DialogueError::Config(format!(
                "intent config version {} is not supported",
                file.format_version
            )));
        }
        IntentSet::new(file.intents)
    }

    pub fn load(path: &Path) -> Result<Self, DialogueError> {
        let text = std::fs::read_to_string(path).map_err(|e| DialogueError::Config(e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn keywords(&self, intent: Intent) -> &[String] {
        self.keywords.get(&intent).map_or(&[], Vec::as_slice)
    }

    pub(crate) fn intent_of(&self, token: &str) -> Option<Intent> {
        self.lookup.get(token).copied()
    }
}

impl Default for IntentSet {
    fn default() -> Self {
        IntentSet::from_toml_str(DEFAULT_INTENTS).expect("bundled intents are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbForms {
    pub past: String,
    pub participle: String,
    pub gerund: String,
    pub noun: String,
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Templates {
    pub greeting: String,
    pub activity: String,
    pub duration_above: String,
    pub duration_below: String,
    pub frequency_above: String,
    pub frequency_below: String,
    pub start_hour_above: String,
    pub start_hour_below: String,
    pub transition: String,
    pub transition_day_start: String,
    pub prediction: String,
    pub store_request: String,
    pub prompt: String,
    pub prompt_context: String,
    pub answered: String,
    pub declined: String,
    pub thanks: String,
    pub decline_ack: String,
    pub no_activity: String,
    pub no_abnormal: String,
    pub reprompt: String,
    pub reprompt_confirm: String,
}

/// Verb forms per activity plus the sentence templates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbTable {
    pub format_version: u32,
    pub templates: Templates,
    pub labels: BTreeMap<ActivityLabel, VerbForms>,
}

impl VerbTable {
    pub fn from_toml_str(text: &str) -> Result<Self, DialogueError> {
        let table: VerbTable = toml::from_str(text).map_err(|e| DialogueError::Config(e.to_string()))?;
        if table.format_version != CONFIG_FORMAT_VERSION {
            return Err(DialogueError::Config(format!(
                "verb table version {} is not supported",
                table.format_version
            )));
        }
        if let Some(missing) = ActivityLabel::ALL.iter().find(|l| !table.labels.contains_key(l)) {
            return Err(DialogueError::Config(format!("no verb forms for {missing}")));
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, DialogueError> {
        let text = std::fs::read_to_string(path).map_err(|e| DialogueError::Config(e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn forms(&self, label: ActivityLabel) -> &VerbForms {
        &self.labels[&label]
    }
}

impl Default for VerbTable {
    fn default() -> Self {
        VerbTable::from_toml_str(DEFAULT_VERBS).expect("bundled verb table is valid")
    }
}

/// Substitutes `{name}` placeholders.
pub(crate) fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (name, value) in slots {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}
