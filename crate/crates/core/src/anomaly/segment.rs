use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::label::ActivityLabel;

/// A maximal run of one label within a day, `[start_slice, end_slice)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivitySegment {
    pub label: ActivityLabel,
    pub start_slice: usize,
    pub end_slice: usize,
    pub day: NaiveDate,
}

impl ActivitySegment {
    pub fn duration(&self) -> usize {
        self.end_slice - self.start_slice
    }
}

/// Decoded (or ground-truth) labels of one day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayPath {
    pub date: NaiveDate,
    pub labels: Vec<ActivityLabel>,
}

pub fn segment_day(date: NaiveDate, labels: &[ActivityLabel]) -> Vec<ActivitySegment> {
    let mut segments: Vec<ActivitySegment> = Vec::new();
    for (t, &label) in labels.iter().enumerate() {
        match segments.last_mut() {
            Some(last) if last.label == label => last.end_slice = t + 1,
            _ => segments.push(ActivitySegment {
                label,
                start_slice: t,
                end_slice: t + 1,
                day: date,
            }),
        }
    }
    segments
}

/// Run-length encodes each day separately, so no segment crosses midnight.
pub fn segment(days: &[DayPath]) -> Vec<ActivitySegment> {
    days.iter().flat_map(|d| segment_day(d.date, &d.labels)).collect()
}
