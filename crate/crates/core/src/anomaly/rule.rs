use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ContextFeatures, Feature, FeaturizedSegment, GaussianStats};
use crate::hmm::HmmModel;
use crate::label::ActivityLabel;

/// Two-sided 90% normal quantile.
pub const CI_Z: f64 = 1.6449;
/// Transitions less likely than this are abnormal.
pub const TRANSITION_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyVerdict {
    pub label: ActivityLabel,
    pub flags: BTreeMap<Feature, bool>,
    pub any: bool,
    /// Most likely activity after the previous one.
    pub expected_next: ActivityLabel,
    /// For flagged features: whether the value lies above the expected one.
    pub above_expected: BTreeMap<Feature, bool>,
}

impl AnomalyVerdict {
    pub fn flagged(&self, feature: Feature) -> bool {
        self.flags.get(&feature).copied().unwrap_or(false)
    }

    pub fn flagged_features(&self) -> Vec<Feature> {
        Feature::ALL.into_iter().filter(|f| self.flagged(*f)).collect()
    }
}

/// Labels one segment with the interval / threshold rule.
///
/// Numeric features are abnormal outside `[mu - z sigma, mu + z sigma]`;
/// activities without a usable prior are never flagged on that feature.
pub fn rule_label(features: &ContextFeatures, stats: &GaussianStats, model: &HmmModel) -> AnomalyVerdict {
    let mut flags = BTreeMap::new();
    let mut above_expected = BTreeMap::new();

    let transition = features.transition_prob < TRANSITION_THRESHOLD;
    flags.insert(Feature::Transition, transition);
    if transition {
        above_expected.insert(Feature::Transition, false);
    }
    for feature in Feature::GAUSSIAN {
        let value = features.value(feature);
        let flagged = match stats.usable(features.label, feature) {
            Some(e) => {
                let half = CI_Z * e.sigma;
                value < e.mu - half || value > e.mu + half
            }
            None => false,
        };
        flags.insert(feature, flagged);
        if flagged {
            let mu = stats.get(features.label, feature).map_or(0.0, |e| e.mu);
            above_expected.insert(feature, value > mu);
        }
    }
    AnomalyVerdict {
        label: features.label,
        any: flags.values().any(|&f| f),
        flags,
        expected_next: model.expected_next(features.prev_label),
        above_expected,
    }
}

pub fn rule_labels(rows: &[FeaturizedSegment], stats: &GaussianStats, model: &HmmModel) -> Vec<AnomalyVerdict> {
    rows.iter().map(|r| rule_label(&r.features, stats, model)).collect()
}
