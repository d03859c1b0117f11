use chrono::{Duration, NaiveDateTime, NaiveTime, Timelike};

use super::{
    ActivityAnnotation, Day, IngestError, Recording, SensorEvent, TimeSlice, SLICES_PER_DAY,
    SLICE_SECONDS,
};
use crate::label::ActivityLabel;

/// Half-open wallclock range `[start, end)`, both ends at local midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceRange {
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

fn is_midnight(t: NaiveDateTime) -> bool {
    t.time() == NaiveTime::MIN
}

impl SliceRange {
    pub fn new(start: NaiveDateTime, end: NaiveDateTime) -> Result<Self, IngestError> {
        if !is_midnight(start) || !is_midnight(end) || end < start {
            return Err(IngestError::BadRange);
        }
        Ok(SliceRange { start, end })
    }

    /// Smallest midnight-aligned range covering every event and annotation.
    pub fn covering(events: &[SensorEvent], annotations: &[ActivityAnnotation]) -> Option<Self> {
        let starts = events
            .iter()
            .map(|e| e.start)
            .chain(annotations.iter().map(|a| a.start));
        let ends = events.iter().map(|e| e.end).chain(annotations.iter().map(|a| a.end));
        let first = starts.min()?;
        let last = ends.max()?;
        let start = first.date().and_time(NaiveTime::MIN);
        let mut end = last.date().and_time(NaiveTime::MIN);
        if end < last || end == start {
            end += Duration::days(1);
        }
        Some(SliceRange { start, end })
    }

    pub fn slice_count(&self) -> usize {
        ((self.end - self.start).num_seconds() / SLICE_SECONDS) as usize
    }
}

fn check_overlaps(sorted: &[ActivityAnnotation]) -> Result<(), IngestError> {
    let mut reach: Option<&ActivityAnnotation> = None;
    for a in sorted {
        if let Some(prev) = reach {
            if a.start < prev.end {
                return Err(IngestError::OverlappingAnnotations {
                    first: describe(prev),
                    second: describe(a),
                });
            }
        }
        if reach.is_none_or(|r| a.end > r.end) {
            reach = Some(a);
        }
    }
    Ok(())
}

fn describe(a: &ActivityAnnotation) -> String {
    format!("{} [{} .. {}]", a.label, a.start, a.end)
}

/// Discretizes events and annotations over `range` into 60 s slices.
///
/// A sensor fires in a slice when its activation interval overlaps the slice
/// with nonzero measure; an instantaneous event (start == end) fires in the
/// slice that contains it. Each slice takes the label of the annotation that
/// contains its midpoint (the later-starting one on a shared boundary), or
/// `IdleUnlabeled` when none does.
pub fn discretize(
    events: &[SensorEvent],
    annotations: &[ActivityAnnotation],
    n_sensors: usize,
    range: SliceRange,
) -> Result<Recording, IngestError> {
    let total = range.slice_count();
    let mut x = vec![0u8; total * n_sensors];
    let mut y = vec![ActivityLabel::IdleUnlabeled; total];
    let offset = |t: NaiveDateTime| (t - range.start).num_seconds();
    let span = total as i64 * SLICE_SECONDS;

    for e in events {
        if e.sensor_id >= n_sensors {
            return Err(IngestError::SensorIndex {
                index: e.sensor_id,
                n_sensors,
            });
        }
        let (s, t) = (offset(e.start), offset(e.end));
        let (first, last) = if s == t {
            if s < 0 || s >= span {
                continue;
            }
            (s / SLICE_SECONDS, s / SLICE_SECONDS)
        } else {
            let (s, t) = (s.max(0), t.min(span));
            if s >= t {
                continue;
            }
            (s / SLICE_SECONDS, (t - 1) / SLICE_SECONDS)
        };
        for slice in first..=last {
            x[slice as usize * n_sensors + e.sensor_id] = 1;
        }
    }

    let mut sorted = annotations.to_vec();
    sorted.sort_by_key(|a| (a.start, a.end, a.label));
    check_overlaps(&sorted)?;
    for a in &sorted {
        // slices whose midpoint (60k + 30) lies in [start, end]
        let (s, t) = (offset(a.start), offset(a.end));
        let first = ((s - 30) as f64 / SLICE_SECONDS as f64).ceil().max(0.0) as i64;
        let last = ((t - 30) as f64 / SLICE_SECONDS as f64).floor() as i64;
        let last = last.min(total as i64 - 1);
        for slice in first..=last {
            y[slice as usize] = a.label;
        }
    }

    let mut days = Vec::with_capacity(total / SLICES_PER_DAY + 1);
    for (i, label) in y.into_iter().enumerate() {
        let wallclock = range.start + Duration::seconds(i as i64 * SLICE_SECONDS);
        let t = (wallclock.hour() * 60 + wallclock.minute()) as usize;
        if t == 0 || days.is_empty() {
            days.push(Day {
                date: wallclock.date(),
                slices: Vec::with_capacity(SLICES_PER_DAY),
            });
        }
        let day: &mut Day = days.last_mut().expect("pushed above");
        day.slices.push(TimeSlice {
            t,
            wallclock,
            x: x[i * n_sensors..(i + 1) * n_sensors].to_vec(),
            y: Some(label),
        });
    }
    Ok(Recording { n_sensors, days })
}

/// Discretizes over the smallest midnight-aligned range covering the data.
pub fn discretize_dataset(
    events: &[SensorEvent],
    annotations: &[ActivityAnnotation],
    n_sensors: usize,
) -> Result<Recording, IngestError> {
    match SliceRange::covering(events, annotations) {
        Some(range) => discretize(events, annotations, n_sensors, range),
        None => Ok(Recording {
            n_sensors,
            days: Vec::new(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn at(day: u32, h: u32, m: u32, s: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2011, 11, day)
            .unwrap()
            .and_hms_opt(h, m, s)
            .unwrap()
    }

    fn event(id: usize, start: NaiveDateTime, end: NaiveDateTime) -> SensorEvent {
        SensorEvent {
            sensor_id: id,
            start,
            end,
            location: format!("s{id}"),
            kind: "PIR".into(),
            place: "Room".into(),
        }
    }

    fn one_day() -> SliceRange {
        SliceRange::new(at(28, 0, 0, 0), at(29, 0, 0, 0)).unwrap()
    }

    #[test]
    fn event_straddling_boundary_fires_both_slices() {
        let events = [event(3, at(28, 0, 0, 30), at(28, 0, 1, 30))];
        let rec = discretize(&events, &[], 12, one_day()).unwrap();
        let slices = &rec.days[0].slices;
        assert_eq!(slices[0].x[3], 1);
        assert_eq!(slices[1].x[3], 1);
        assert_eq!(slices[2].x[3], 0);
    }

    #[test]
    fn event_ending_on_boundary_has_no_measure_in_next_slice() {
        let events = [event(0, at(28, 0, 0, 10), at(28, 0, 1, 0))];
        let rec = discretize(&events, &[], 1, one_day()).unwrap();
        assert_eq!(rec.days[0].slices[0].x[0], 1);
        assert_eq!(rec.days[0].slices[1].x[0], 0);
    }

    #[test]
    fn instantaneous_event_fires_its_slice() {
        let events = [event(0, at(28, 0, 5, 0), at(28, 0, 5, 0))];
        let rec = discretize(&events, &[], 1, one_day()).unwrap();
        let fired: Vec<usize> = rec.days[0]
            .slices
            .iter()
            .filter(|s| s.fired(0))
            .map(|s| s.t)
            .collect();
        assert_eq!(fired, vec![5]);
    }

    #[test]
    fn empty_day_is_idle() {
        let rec = discretize(&[], &[], 12, one_day()).unwrap();
        assert_eq!(rec.days.len(), 1);
        assert_eq!(rec.total_slices(), 1440);
        assert!(rec
            .slices()
            .all(|s| s.x.iter().all(|&v| v == 0) && s.y == Some(ActivityLabel::IdleUnlabeled)));
        assert_eq!(rec.days[0].slices[1439].t, 1439);
    }

    #[test]
    fn labels_by_midpoint_and_later_start_wins_ties() {
        let annotations = [
            ActivityAnnotation {
                label: ActivityLabel::Sleeping,
                start: at(28, 0, 0, 0),
                end: at(28, 0, 2, 30),
            },
            ActivityAnnotation {
                label: ActivityLabel::Toileting,
                start: at(28, 0, 2, 30),
                end: at(28, 0, 4, 0),
            },
        ];
        let rec = discretize(&[], &annotations, 1, one_day()).unwrap();
        let y: Vec<_> = rec.days[0].slices[..5].iter().map(|s| s.y.unwrap()).collect();
        use ActivityLabel::*;
        assert_eq!(y, vec![Sleeping, Sleeping, Toileting, Toileting, IdleUnlabeled]);
    }

    #[test]
    fn overlapping_annotations_are_rejected() {
        let annotations = [
            ActivityAnnotation {
                label: ActivityLabel::Sleeping,
                start: at(28, 0, 0, 0),
                end: at(28, 8, 0, 0),
            },
            ActivityAnnotation {
                label: ActivityLabel::Toileting,
                start: at(28, 3, 0, 0),
                end: at(28, 3, 5, 0),
            },
        ];
        let err = discretize(&[], &annotations, 1, one_day()).unwrap_err();
        assert!(err.to_string().contains("Sleeping"));
        assert!(err.to_string().contains("Toileting"));
    }

    #[test]
    fn misaligned_range_is_rejected() {
        assert!(SliceRange::new(at(28, 0, 0, 1), at(29, 0, 0, 0)).is_err());
        assert!(SliceRange::new(at(29, 0, 0, 0), at(28, 0, 0, 0)).is_err());
    }

    #[test]
    fn multi_day_range_splits_at_midnight() {
        let range = SliceRange::new(at(1, 0, 0, 0), at(22, 0, 0, 0)).unwrap();
        let rec = discretize(&[], &[], 12, range).unwrap();
        assert_eq!(rec.days.len(), 21);
        assert_eq!(rec.total_slices(), 30_240);
        assert!(rec.days.iter().all(|d| d.slices.len() == 1440));
    }

    #[test]
    fn covering_range_rounds_out_to_midnight() {
        let events = [event(0, at(28, 2, 0, 0), at(29, 0, 0, 0))];
        let range = SliceRange::covering(&events, &[]).unwrap();
        assert_eq!(range.start, at(28, 0, 0, 0));
        assert_eq!(range.end, at(29, 0, 0, 0));
    }

    fn arb_events() -> impl Strategy<Value = Vec<SensorEvent>> {
        proptest::collection::vec((0usize..4, 0i64..86_400, 0i64..600), 0..30).prop_map(|v| {
            v.into_iter()
                .map(|(id, s, len)| {
                    let start = at(28, 0, 0, 0) + Duration::seconds(s);
                    event(id, start, start + Duration::seconds(len))
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn order_independent_and_every_sensor_seen(events in arb_events(), seed in any::<u64>()) {
            let rec = discretize(&events, &[], 4, one_day()).unwrap();
            let mut shuffled = events.clone();
            // deterministic permutation from the seed
            let n = shuffled.len();
            for i in (1..n).rev() {
                let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % (i as u64 + 1)) as usize;
                shuffled.swap(i, j);
            }
            let again = discretize(&shuffled, &[], 4, one_day()).unwrap();
            prop_assert_eq!(&rec, &again);
            prop_assert_eq!(rec.total_slices(), 1440);
            for e in &events {
                let hits: usize = rec.slices().map(|s| s.x[e.sensor_id] as usize).sum();
                prop_assert!(hits >= 1);
            }
        }
    }
}
