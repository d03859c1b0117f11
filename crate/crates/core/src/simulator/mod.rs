//! Synthetic households, use-case injection and paced replay.

mod household;
mod inject;
mod replay;
mod scenario;

use std::path::PathBuf;

pub use household::{generate_household, Household, HouseholdSpec, ADLS_FILE, SENSORS_FILE};
pub use inject::{
    inject, modal_patterns, InjectContext, Injection, InjectionRecord, ShiftMode, UseCase, DEFAULT_IDLE_MINUTES, DOMINANT_SHARE,
    DEFAULT_SEVERITY, DEFAULT_TOILET_EXTRA,
};
pub use replay::{replay, ReplayReport, SliceSink};
pub use scenario::{BaseSpec, Scenario, SCENARIO_FORMAT_VERSION};

use crate::ingest::IngestError;
use crate::label::ActivityLabel;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("day {day} has no {label} segment to modify for {use_case}")]
    NoSegment { day: usize, use_case: UseCase, label: ActivityLabel },
    #[error("injection day {day} is outside the recording ({days} days)")]
    BadDay { day: usize, days: usize },
    #[error("day {day} has {available} idle or resting minutes to give, {need} needed")]
    NotEnoughSlack { day: usize, need: usize, available: usize },
    #[error("no usable statistics for {0}")]
    MissingStats(ActivityLabel),
    #[error("day {0} has unlabeled slices")]
    Unlabeled(usize),
    #[error("{0}")]
    Param(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("sink failed after {} slices: {reason}", report.slices_sent)]
    Sink { reason: String, report: Box<ReplayReport> },
}
