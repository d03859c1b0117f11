use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{
    discretize, write_activities, write_sensors, ActivityAnnotation, IngestError, Recording, SensorEvent,
    SensorMap, SliceRange,
};
use crate::label::ActivityLabel::{self, *};

pub const SENSORS_FILE: &str = "OrdonezA_Sensors.txt";
pub const ADLS_FILE: &str = "OrdonezA_ADLs.txt";

/// A seeded single-resident routine over the twelve OrdonezA sensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HouseholdSpec {
    pub start: NaiveDate,
    pub days: usize,
    pub seed: u64,
}

impl Default for HouseholdSpec {
    fn default() -> Self {
        HouseholdSpec { start: NaiveDate::from_ymd_opt(2011, 11, 28).expect("valid date"), days: 21, seed: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct Household {
    pub spec: HouseholdSpec,
    pub sensor_map: SensorMap,
    pub events: Vec<SensorEvent>,
    pub annotations: Vec<ActivityAnnotation>,
}

impl Household {
    pub fn recording(&self) -> Result<Recording, IngestError> {
        let start = self.spec.start.and_hms_opt(0, 0, 0).expect("midnight");
        let range = SliceRange::new(start, start + Duration::days(self.spec.days as i64))?;
        discretize(&self.events, &self.annotations, self.sensor_map.len(), range)
    }

    /// Writes the two OrdonezA-format text files into `dir`.
    pub fn write_ordonez(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let sensors = dir.join(SENSORS_FILE);
        let adls = dir.join(ADLS_FILE);
        write_sensors(BufWriter::new(File::create(&sensors)?), &self.events)?;
        write_activities(BufWriter::new(File::create(&adls)?), &self.annotations)?;
        Ok((sensors, adls))
    }
}

enum Step {
    /// Activity with mean / sd minutes, done with probability p.
    Do(ActivityLabel, f64, f64, f64),
    /// Activity lasting until roughly the given minute of the day.
    Until(ActivityLabel, f64, f64),
}

const ROUTINE: &[Step] = &[
    Step::Do(Toileting, 5.0, 1.5, 1.0),
    Step::Do(Showering, 14.0, 3.0, 0.7),
    Step::Do(Grooming, 8.0, 2.0, 0.9),
    Step::Do(Breakfast, 18.0, 4.0, 1.0),
    Step::Until(SpareTimeTV, 615.0, 20.0),
    Step::Do(Leaving, 110.0, 35.0, 0.6),
    Step::Do(Toileting, 4.0, 1.0, 0.7),
    Step::Until(SpareTimeTV, 760.0, 15.0),
    Step::Do(Lunch, 35.0, 8.0, 1.0),
    Step::Do(Toileting, 4.0, 1.0, 0.5),
    Step::Until(SpareTimeTV, 960.0, 30.0),
    Step::Do(Snack, 8.0, 2.0, 0.6),
    Step::Do(Leaving, 60.0, 20.0, 0.3),
    Step::Until(SpareTimeTV, 1155.0, 15.0),
    Step::Do(Dinner, 40.0, 8.0, 1.0),
    Step::Do(Toileting, 4.0, 1.0, 0.6),
    Step::Until(SpareTimeTV, 1365.0, 20.0),
    Step::Do(Grooming, 6.0, 2.0, 0.8),
    Step::Do(Toileting, 4.0, 1.0, 0.8),
];

// sensor indices in the OrdonezA map
const SHOWER: usize = 0;
const BASIN: usize = 1;
const COOKTOP: usize = 2;
const MAINDOOR: usize = 3;
const FRIDGE: usize = 4;
const CABINET: usize = 5;
const CUPBOARD: usize = 6;
const TOILET: usize = 7;
const SEAT: usize = 8;
const BED: usize = 9;
const MICROWAVE: usize = 10;
const TOASTER: usize = 11;

struct Builder<'a> {
    rng: ChaCha8Rng,
    map: &'a SensorMap,
    origin: NaiveDateTime,
    events: Vec<SensorEvent>,
    annotations: Vec<ActivityAnnotation>,
}

impl Builder<'_> {
    fn minutes(&mut self, mean: f64, sd: f64) -> i64 {
        let n = Normal::new(mean, sd).expect("finite sd").sample(&mut self.rng);
        (n * 60.0).round().max(120.0) as i64
    }

    fn at(&self, sec: i64) -> NaiveDateTime {
        self.origin + Duration::seconds(sec)
    }

    fn fire(&mut self, sensor: usize, start: i64, len: i64) {
        let key = self.map.key(sensor).expect("sensor in map").clone();
        self.events.push(SensorEvent {
            sensor_id: sensor,
            start: self.at(start),
            end: self.at(start + len.max(0)),
            location: key.location,
            kind: key.kind,
            place: key.place,
        });
    }

    /// A few short activations of `sensor` inside `[s, e)`.
    fn bursts(&mut self, sensor: usize, s: i64, e: i64, count: usize, len: i64) {
        for _ in 0..count {
            if e - s <= len {
                break;
            }
            let at = self.rng.random_range(s..e - len);
            let l = self.rng.random_range(len / 2..=len);
            self.fire(sensor, at, l);
        }
    }

    fn maybe(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn activity(&mut self, label: ActivityLabel, s: i64, e: i64) {
        self.annotations.push(ActivityAnnotation { label, start: self.at(s), end: self.at(e - 1) });
        let d = e - s;
        match label {
            Sleeping => {
                let mut t = s + self.rng.random_range(30..300).min(d / 4);
                while t < e - 60 {
                    let len = self.rng.random_range(3600..4 * 3600).min(e - 30 - t);
                    self.fire(BED, t, len);
                    t += len + self.rng.random_range(60..600);
                }
            }
            Toileting => {
                let at = e - self.rng.random_range(20..60);
                self.fire(TOILET, at, 0);
                if self.maybe(0.7) {
                    self.bursts(BASIN, e - 90, e, 1, 30);
                }
            }
            Showering => {
                self.fire(BASIN, s + 10, 30);
                let n = (d / 180).max(2) as usize;
                self.bursts(SHOWER, s + 60, e, n, 90);
            }
            Grooming => {
                self.bursts(BASIN, s, e, 3, 60);
                self.bursts(CABINET, s, e, 2, 20);
            }
            Breakfast | Lunch | Dinner | Snack => {
                self.bursts(FRIDGE, s, e, 2, 30);
                if self.maybe(0.8) {
                    self.bursts(CUPBOARD, s, e, 2, 20);
                }
                match label {
                    Breakfast => {
                        if self.maybe(0.7) {
                            self.bursts(TOASTER, s, e, 1, 240);
                        }
                        self.bursts(COOKTOP, s, e, 2, 60);
                    }
                    Lunch | Dinner => {
                        let n = (d / 300).max(2) as usize;
                        self.bursts(COOKTOP, s, e, n, 120);
                        if self.maybe(if label == Lunch { 0.6 } else { 0.4 }) {
                            self.bursts(MICROWAVE, s, e, 1, 240);
                        }
                    }
                    _ => {}
                }
            }
            SpareTimeTV => {
                let mut t = s + self.rng.random_range(10..60).min(d / 4);
                while t < e - 60 {
                    let len = self.rng.random_range(1200..5400).min(e - 30 - t);
                    self.fire(SEAT, t, len);
                    t += len + self.rng.random_range(60..400);
                }
            }
            Leaving => {
                let (out, back) = (self.rng.random_range(3..20), self.rng.random_range(3..20));
                self.fire(MAINDOOR, s + 5, out);
                self.fire(MAINDOOR, e - 30, back);
            }
            IdleUnlabeled => {}
        }
    }

    fn gap(&mut self, s: i64) -> i64 {
        if !self.maybe(0.5) {
            return s;
        }
        let len = self.rng.random_range(60..360);
        if self.maybe(0.15) {
            let sensor = if self.maybe(0.5) { COOKTOP } else { BASIN };
            self.fire(sensor, s + len / 2, 10);
        }
        s + len
    }
}

pub fn generate_household(spec: HouseholdSpec) -> Household {
    let map = SensorMap::ordonez_a();
    let origin = spec.start.and_hms_opt(0, 0, 0).expect("midnight");
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        map: &map,
        origin,
        events: Vec::new(),
        annotations: Vec::new(),
    };
    let day = 86_400i64;
    let end = spec.days as i64 * day;
    // bedtime of the previous evening
    let mut sleep_from = 0i64;
    for d in 0..spec.days as i64 {
        let base = d * day;
        let wake = base + b.minutes(450.0, 25.0);
        if sleep_from < wake {
            if b.maybe(0.3) && wake - sleep_from > 4 * 3600 {
                let at = b.rng.random_range(sleep_from + 3600..wake - 3600);
                let len = b.minutes(4.0, 1.0);
                b.activity(Sleeping, sleep_from, at);
                b.activity(Toileting, at, at + len);
                b.activity(Sleeping, at + len, wake);
            } else {
                b.activity(Sleeping, sleep_from, wake);
            }
        }
        let mut t = wake;
        for step in ROUTINE {
            t = b.gap(t);
            match *step {
                Step::Do(label, mean, sd, p) => {
                    if b.maybe(p) {
                        let len = b.minutes(mean, sd);
                        b.activity(label, t, t + len);
                        t += len;
                    }
                }
                Step::Until(label, mean, sd) => {
                    let until = base + b.minutes(mean, sd);
                    if until > t + 300 {
                        b.activity(label, t, until);
                        t = until;
                    }
                }
            }
        }
        sleep_from = b.gap(t);
    }
    if sleep_from < end {
        b.activity(Sleeping, sleep_from, end);
    }
    let mut events = b.events;
    let mut annotations = b.annotations;
    events.sort_by_key(|e| (e.start, e.sensor_id));
    annotations.sort_by_key(|a| a.start);
    Household { spec, sensor_map: map, events, annotations }
}
