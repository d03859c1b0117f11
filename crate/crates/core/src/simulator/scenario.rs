use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{generate_household, inject, modal_patterns, HouseholdSpec, InjectContext, Injection, InjectionRecord, SimError};
use crate::anomaly::GaussianStats;
use crate::ingest::{discretize_dataset, parse_dataset, Recording, SensorMap};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

fn unlimited() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    Synthetic {
        #[serde(default = "default_start")]
        start: NaiveDate,
        days: usize,
        /// Falls back to the scenario seed.
        #[serde(default)]
        seed: Option<u64>,
    },
    Dataset {
        sensors: PathBuf,
        activities: PathBuf,
        #[serde(default)]
        sensor_map: Option<PathBuf>,
    },
}

fn default_start() -> NaiveDate {
    HouseholdSpec::default().start
}

impl BaseSpec {
    /// Generates or loads the recording; `default_seed` is used when a synthetic
    /// base names none.
    pub fn recording(&self, default_seed: u64) -> Result<Recording, SimError> {
        match self {
            BaseSpec::Synthetic { start, days, seed } => {
                let spec = HouseholdSpec { start: *start, days: *days, seed: seed.unwrap_or(default_seed) };
                Ok(generate_household(spec).recording()?)
            }
            BaseSpec::Dataset { sensors, activities, sensor_map } => {
                let map = match sensor_map {
                    Some(p) => SensorMap::load(p)?,
                    None => SensorMap::ordonez_a(),
                };
                let open = |p: &PathBuf| {
                    File::open(p).map(BufReader::new).map_err(|e| SimError::Io { path: p.clone(), source: e })
                };
                let (events, annotations) = parse_dataset(open(sensors)?, open(activities)?, &map)?;
                Ok(discretize_dataset(&events, &annotations, map.len())?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    pub seed: u64,
    /// Acceleration factor; `inf` replays as fast as possible.
    #[serde(default = "unlimited")]
    pub speed: f64,
    pub base: BaseSpec,
    #[serde(default)]
    pub injections: Vec<Injection>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| SimError::Scenario(e.to_string()))?;
        if scenario.format_version != SCENARIO_FORMAT_VERSION {
            return Err(SimError::Scenario(format!(
                "scenario format version {} is not supported (expected {SCENARIO_FORMAT_VERSION})",
                scenario.format_version
            )));
        }
        if scenario.speed.is_nan() || scenario.speed < 1.0 {
            return Err(SimError::Scenario(format!("speed must be >= 1, got {}", scenario.speed)));
        }
        for injection in &scenario.injections {
            injection.validate()?;
        }
        Ok(scenario)
    }

    /// Loads a scenario file; relative dataset paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io { path: path.into(), source: e })?;
        let mut scenario = Self::from_toml_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        if let BaseSpec::Dataset { sensors, activities, sensor_map } = &mut scenario.base {
            for p in [Some(sensors), Some(activities), sensor_map.as_mut()].into_iter().flatten() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn base_recording(&self) -> Result<Recording, SimError> {
        self.base.recording(self.seed)
    }

    /// The base recording with every injection applied in order.
    pub fn build(&self, stats: &GaussianStats) -> Result<(Recording, Vec<InjectionRecord>), SimError> {
        let mut recording = self.base_recording()?;
        let ctx = InjectContext { stats: stats.clone(), modal: modal_patterns(&recording) };
        let mut manifest = Vec::with_capacity(self.injections.len());
        for injection in &self.injections {
            let (next, record) = inject(&recording, injection, &ctx)?;
            recording = next;
            manifest.push(record);
        }
        Ok((recording, manifest))
    }
}
