use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ActivitySegment, AnomalyError, Feature};
use crate::hmm::HmmModel;
use crate::label::ActivityLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextFeatures {
    pub label: ActivityLabel,
    /// Previous segment's label; `None` for the first segment of a day.
    pub prev_label: Option<ActivityLabel>,
    pub transition_prob: f64,
    pub duration_min: u32,
    /// Segments of this label so far today, this one included.
    pub frequency_today: u32,
    /// Hour of day in [0, 24).
    pub start_hour: f64,
}

impl ContextFeatures {
    pub fn value(&self, feature: Feature) -> f64 {
        match feature {
            Feature::Transition => self.transition_prob,
            Feature::Duration => self.duration_min as f64,
            Feature::Frequency => self.frequency_today as f64,
            Feature::StartHour => self.start_hour,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeaturizedSegment {
    pub segment: ActivitySegment,
    pub features: ContextFeatures,
}

/// Likelihood of moving into `label`: the prior at the start of a day,
/// otherwise the transition probability conditioned on leaving `prev`.
pub(crate) fn transition_likelihood(
    model: &HmmModel,
    prev: Option<ActivityLabel>,
    label: ActivityLabel,
) -> Result<f64, AnomalyError> {
    let j = model.state_index(label).ok_or(AnomalyError::UnknownLabel(label))?;
    match prev {
        None => Ok(model.prior[j]),
        Some(p) => {
            let i = model.state_index(p).ok_or(AnomalyError::UnknownLabel(p))?;
            if i == j {
                return Ok(model.transition[i][i]);
            }
            let leave = 1.0 - model.transition[i][i];
            Ok(if leave > 0.0 {
                model.transition[i][j] / leave
            } else {
                0.0
            })
        }
    }
}

/// Tracks per-day context while segments arrive in time order.
#[derive(Debug, Default, Clone)]
pub(crate) struct FeatureState {
    day: Option<chrono::NaiveDate>,
    prev: Option<ActivityLabel>,
    counts: HashMap<ActivityLabel, u32>,
}

impl FeatureState {
    pub fn next(
        &mut self,
        segment: &ActivitySegment,
        model: &HmmModel,
    ) -> Result<ContextFeatures, AnomalyError> {
        if self.day != Some(segment.day) {
            self.day = Some(segment.day);
            self.prev = None;
            self.counts.clear();
        }
        let count = self.counts.entry(segment.label).or_insert(0);
        *count += 1;
        let features = ContextFeatures {
            label: segment.label,
            prev_label: self.prev,
            transition_prob: transition_likelihood(model, self.prev, segment.label)?,
            duration_min: segment.duration() as u32,
            frequency_today: *count,
            start_hour: segment.start_slice as f64 / 60.0,
        };
        self.prev = Some(segment.label);
        Ok(features)
    }
}

/// Computes context features for time-ordered segments.
pub fn featurize(
    segments: &[ActivitySegment],
    model: &HmmModel,
) -> Result<Vec<FeaturizedSegment>, AnomalyError> {
    let mut state = FeatureState::default();
    segments
        .iter()
        .map(|s| {
            Ok(FeaturizedSegment {
                segment: *s,
                features: state.next(s, model)?,
            })
        })
        .collect()
}
