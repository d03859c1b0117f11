//! Contextual anomaly detection over recognized activity segments.
//!
//! Each segment is described by four features (transition likelihood,
//! duration, per-day frequency and starting hour). Ground-truth flags come
//! from a rule: Gaussian 90% intervals for the numeric features and a 0.05
//! floor on the transition likelihood. One decision tree per feature learns
//! those flags and provides a readable trace for each prediction.

mod detectors;
mod features;
mod gaussian;
mod rule;
mod segment;
mod synthetic;
mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use detectors::{
    encode_row, evaluate_detectors_lodo, train_detectors, DetectorMetrics, DetectorReport,
    FeatureDetectors,
};
pub use features::{featurize, ContextFeatures, FeaturizedSegment};
pub(crate) use features::FeatureState;
pub use gaussian::{fit_gaussians, GaussianEntry, GaussianStats};
pub use rule::{rule_label, rule_labels, AnomalyVerdict, CI_Z, TRANSITION_THRESHOLD};
pub use segment::{segment, segment_day, ActivitySegment, DayPath};
pub use synthetic::{gen_synthetic, label_marginals, SYNTHETIC_EPOCH};
pub use tree::{DecisionTree, Explanation, TraceStep, TreeConfig};

/// The four contextual features, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Transition,
    Duration,
    Frequency,
    StartHour,
}

impl Feature {
    pub const ALL: [Feature; 4] = [
        Feature::Transition,
        Feature::Duration,
        Feature::Frequency,
        Feature::StartHour,
    ];

    /// Features with a Gaussian prior.
    pub const GAUSSIAN: [Feature; 3] = [Feature::Duration, Feature::Frequency, Feature::StartHour];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Transition => "transition",
            Feature::Duration => "duration",
            Feature::Frequency => "frequency",
            Feature::StartHour => "start_hour",
        }
    }

    /// Name of the numeric column the detector splits on.
    pub fn column(self) -> &'static str {
        match self {
            Feature::Transition => "transition_prob",
            Feature::Duration => "duration_min",
            Feature::Frequency => "frequency_today",
            Feature::StartHour => "start_hour",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AnomalyError {
    #[error("label {0} is not a state of the model")]
    UnknownLabel(crate::ActivityLabel),
    #[error("number of synthetic days must be positive, got {0}")]
    BadDayCount(i64),
    #[error("no usable duration statistics for {0}")]
    MissingStats(crate::ActivityLabel),
    #[error("label marginals are empty or not positive")]
    BadMarginals,
    #[error("training rows for the {0} detector contain a single class")]
    SingleClass(Feature),
    #[error("rows and labels differ in length ({rows} vs {labels})")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("artifact format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("artifact: {0}")]
    Serde(#[from] serde_json::Error),
}
