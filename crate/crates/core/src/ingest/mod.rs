//! Dataset ingestion: the two-file Ordóñez text format, the sensor map, and
//! discretization into 60-second time slices.

mod discretize;
mod format;
mod sensor_map;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::label::ActivityLabel;

pub use discretize::{discretize, discretize_dataset, SliceRange};
pub use format::{
    parse_activities, parse_dataset, parse_sensors, read_jsonl, write_activities, write_jsonl,
    write_sensors, TIMESTAMP_FORMAT,
};
pub use sensor_map::{SensorKey, SensorMap};

/// Length of one time slice in seconds.
pub const SLICE_SECONDS: i64 = 60;
/// Number of slices in a full day.
pub const SLICES_PER_DAY: usize = 1440;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: unknown sensor `{token}`")]
    UnknownSensor { line: usize, token: String },
    #[error("line {line}: unknown activity label `{token}`")]
    UnknownLabel { line: usize, token: String },
    #[error("line {line}: end time precedes start time")]
    EndBeforeStart { line: usize },
    #[error("overlapping annotations: {first} and {second}")]
    OverlappingAnnotations { first: String, second: String },
    #[error("range bounds must be midnight-aligned with start <= end")]
    BadRange,
    #[error("sensor map: {0}")]
    SensorMap(String),
    #[error("sensor index {index} out of range for {n_sensors} sensors")]
    SensorIndex { index: usize, n_sensors: usize },
    #[error("jsonl line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One activation interval of a binary sensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub sensor_id: usize,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
    pub location: String,
    pub kind: String,
    pub place: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityAnnotation {
    pub label: ActivityLabel,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

/// A 60-second window summarized as a binary sensor vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSlice {
    /// Index within the day, 0..1440.
    pub t: usize,
    pub wallclock: NaiveDateTime,
    pub x: Vec<u8>,
    pub y: Option<ActivityLabel>,
}

impl TimeSlice {
    pub fn fired(&self, sensor: usize) -> bool {
        self.x.get(sensor).is_some_and(|&v| v != 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Day {
    pub date: NaiveDate,
    pub slices: Vec<TimeSlice>,
}

impl Day {
    /// Ground-truth labels, `None` if any slice is unlabeled.
    pub fn labels(&self) -> Option<Vec<ActivityLabel>> {
        self.slices.iter().map(|s| s.y).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recording {
    pub n_sensors: usize,
    pub days: Vec<Day>,
}

impl Recording {
    pub fn total_slices(&self) -> usize {
        self.days.iter().map(|d| d.slices.len()).sum()
    }

    pub fn slices(&self) -> impl Iterator<Item = &TimeSlice> {
        self.days.iter().flat_map(|d| d.slices.iter())
    }

    pub fn day(&self, date: NaiveDate) -> Option<&Day> {
        self.days.iter().find(|d| d.date == date)
    }

    /// A recording restricted to the given days, in their original order.
    pub fn select_days(&self, keep: impl Fn(&Day) -> bool) -> Recording {
        Recording {
            n_sensors: self.n_sensors,
            days: self.days.iter().filter(|d| keep(d)).cloned().collect(),
        }
    }
}
