use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{InjectionRecord, SimError};
use crate::ingest::{Recording, TimeSlice, SLICE_SECONDS};

/// Consumer of a replayed slice stream.
pub trait SliceSink {
    fn accept(&mut self, slice: &TimeSlice) -> Result<(), String>;

    /// Called once after the last slice.
    fn finish(&mut self) -> Result<(), String> {
        Ok(())
    }
}

impl SliceSink for Vec<TimeSlice> {
    fn accept(&mut self, slice: &TimeSlice) -> Result<(), String> {
        self.push(slice.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub slices_sent: usize,
    pub elapsed_ms: u64,
    /// `None` when replayed as fast as possible.
    pub speed: Option<f64>,
    pub manifest: Vec<InjectionRecord>,
}

/// Feeds every slice to `sink` in order, one slice per `60 s / speed` of
/// wall time. An infinite speed skips pacing.
pub async fn replay<S: SliceSink + ?Sized>(
    recording: &Recording,
    speed: f64,
    manifest: Vec<InjectionRecord>,
    sink: &mut S,
) -> Result<ReplayReport, SimError> {
    if speed.is_nan() || speed < 1.0 {
        return Err(SimError::Scenario(format!("speed must be >= 1, got {speed}")));
    }
    let paced = speed.is_finite();
    let period = std::time::Duration::from_secs_f64(SLICE_SECONDS as f64 / if paced { speed } else { 1.0 });
    let started = Instant::now();
    let clock = tokio::time::Instant::now();
    let mut report = ReplayReport { slices_sent: 0, elapsed_ms: 0, speed: paced.then_some(speed), manifest };
    for (i, slice) in recording.slices().enumerate() {
        if paced {
            tokio::time::sleep_until(clock + period * i as u32).await;
        }
        if let Err(reason) = sink.accept(slice) {
            report.elapsed_ms = started.elapsed().as_millis() as u64;
            return Err(SimError::Sink { reason, report: Box::new(report) });
        }
        report.slices_sent += 1;
    }
    let done = sink.finish();
    report.elapsed_ms = started.elapsed().as_millis() as u64;
    match done {
        Ok(()) => Ok(report),
        Err(reason) => Err(SimError::Sink { reason, report: Box::new(report) }),
    }
}
