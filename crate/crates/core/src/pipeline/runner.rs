use std::sync::Arc;

use chrono::{Duration, NaiveDate, NaiveDateTime};

use super::{
    AbnormalRecord, Bus, DialogueHub, Notification, Payload, PipelineError, RecognizedSlice, SegmentRecord, Topic,
    HIGHLIGHT_STYLE,
};
use crate::anomaly::{rule_label, ActivitySegment, FeatureState};
use crate::artifacts::Artifacts;
use crate::dialogue::{render_abnormal_event, AbnormalEvent, ActivityEvent, DialogueEvent};
use crate::hmm::FixedLagDecoder;
use crate::ingest::{TimeSlice, SLICE_SECONDS};
use crate::label::ActivityLabel;
use crate::simulator::SliceSink;

/// Decision lag of the online decoder, in slices.
pub const DEFAULT_LAG: usize = 30;

#[derive(Debug, Clone, Copy)]
struct Open {
    label: ActivityLabel,
    start: usize,
    end: usize,
}

/// Turns a slice stream into bus events.
///
/// Per slice: `time_slice`; per committed decoder output:
/// `activity_recognized`; per closed segment: `segment_completed`, then
/// `abnormal_detected` and `notification` when the rule flags it. Closed
/// segments also drive the dialogue hub.
pub struct Pipeline {
    bus: Bus,
    artifacts: Arc<Artifacts>,
    hub: Arc<DialogueHub>,
    decoder: FixedLagDecoder,
    day: Option<NaiveDate>,
    open: Option<Open>,
    features: FeatureState,
}

impl Pipeline {
    pub fn new(artifacts: Arc<Artifacts>, hub: Arc<DialogueHub>, lag: usize) -> Self {
        Pipeline {
            bus: hub.bus().clone(),
            decoder: FixedLagDecoder::new(&artifacts.model, lag),
            artifacts,
            hub,
            day: None,
            open: None,
            features: FeatureState::default(),
        }
    }

    pub fn bus(&self) -> &Bus {
        &self.bus
    }

    fn midnight(&self) -> NaiveDateTime {
        self.day.expect("inside a day").and_hms_opt(0, 0, 0).expect("midnight")
    }

    fn wallclock(&self, t: usize) -> NaiveDateTime {
        self.midnight() + Duration::seconds(t as i64 * SLICE_SECONDS)
    }

    pub fn push(&mut self, slice: &TimeSlice) -> Result<(), PipelineError> {
        let date = slice.wallclock.date();
        if self.day.is_some_and(|d| d != date) {
            self.end_day()?;
        }
        self.day = Some(date);
        self.bus.publish(Topic::TimeSlice, slice.wallclock, Payload::TimeSlice(slice.clone()))?;
        for (t, label) in self.decoder.push(&slice.x)? {
            self.commit(t, label)?;
        }
        Ok(())
    }

    /// Flushes the current day: commits the decoder tail and closes the last segment.
    pub fn finish(&mut self) -> Result<(), PipelineError> {
        if self.day.is_some() {
            self.end_day()?;
        }
        Ok(())
    }

    fn end_day(&mut self) -> Result<(), PipelineError> {
        for (t, label) in self.decoder.finish_day() {
            self.commit(t, label)?;
        }
        if let Some(open) = self.open.take() {
            self.close(open)?;
        }
        self.day = None;
        Ok(())
    }

    fn commit(&mut self, t: usize, label: ActivityLabel) -> Result<(), PipelineError> {
        let wallclock = self.wallclock(t);
        let date = self.day.expect("inside a day");
        let record = RecognizedSlice { date, t, wallclock, label };
        self.bus.publish(Topic::ActivityRecognized, wallclock, Payload::ActivityRecognized(record))?;
        match self.open {
            Some(ref mut open) if open.label == label => open.end = t + 1,
            _ => {
                if let Some(open) = self.open.take() {
                    self.close(open)?;
                }
                self.open = Some(Open { label, start: t, end: t + 1 });
            }
        }
        Ok(())
    }

    fn close(&mut self, open: Open) -> Result<(), PipelineError> {
        let a = Arc::clone(&self.artifacts);
        let segment = ActivitySegment {
            label: open.label,
            start_slice: open.start,
            end_slice: open.end,
            day: self.day.expect("inside a day"),
        };
        let (start, end) = (self.wallclock(open.start), self.wallclock(open.end));
        let features = self.features.next(&segment, &a.model)?;
        let record = SegmentRecord { segment, start, end, features };
        self.bus.publish(Topic::SegmentCompleted, end, Payload::SegmentCompleted(record))?;

        let verdict = rule_label(&features, &a.bundle.stats, &a.model);
        if verdict.any {
            let detectors = &a.bundle.detectors;
            let explanations = verdict
                .flagged_features()
                .into_iter()
                .map(|f| (f, detectors.explain(f, &features)))
                .collect();
            let subject = self.hub.read(|e| e.subject().to_string());
            let text = self.hub.read(|e| render_abnormal_event(&subject, &verdict, &features, e.verbs()))?;
            let flags = verdict.flagged_features();
            let notification = Notification {
                activity: segment.label,
                severity: flags.len(),
                flags,
                wallclock: start,
                style: HIGHLIGHT_STYLE.into(),
                summary: text.clone(),
            };
            let record = AbnormalRecord {
                segment,
                start,
                features,
                detector_flags: detectors.predict(&features),
                explanations,
                verdict: verdict.clone(),
                text,
            };
            self.bus.publish(Topic::AbnormalDetected, end, Payload::AbnormalDetected(Box::new(record)))?;
            self.bus.publish(Topic::Notification, end, Payload::Notification(notification))?;
            self.hub.step(DialogueEvent::Abnormal(AbnormalEvent { verdict, features, start }), end)?;
        }
        let completed = ActivityEvent { label: segment.label, start, end };
        self.hub.step(DialogueEvent::ActivityCompleted(completed), end)?;
        Ok(())
    }
}

impl SliceSink for Pipeline {
    fn accept(&mut self, slice: &TimeSlice) -> Result<(), String> {
        self.push(slice).map_err(|e| e.to_string())
    }

    fn finish(&mut self) -> Result<(), String> {
        Pipeline::finish(self).map_err(|e| e.to_string())
    }
}
