use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IngestError;

/// The (location, kind, place) triple that identifies a sensor in the dataset files.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensorKey {
    pub location: String,
    pub kind: String,
    pub place: String,
}

impl SensorKey {
    pub fn new(location: &str, kind: &str, place: &str) -> Self {
        SensorKey {
            location: location.to_string(),
            kind: kind.to_string(),
            place: place.to_string(),
        }
    }

    fn normalized(&self) -> (String, String, String) {
        (
            self.location.to_ascii_lowercase(),
            self.kind.to_ascii_lowercase(),
            self.place.to_ascii_lowercase(),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SensorEntry {
    index: usize,
    #[serde(flatten)]
    key: SensorKey,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SensorMapFile {
    sensors: Vec<SensorEntry>,
}

/// Maps dataset sensor triples to dense indices `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorMap {
    keys: Vec<SensorKey>,
    lookup: HashMap<(String, String, String), usize>,
}

impl SensorMap {
    /// Builds a map where `keys[i]` gets index `i`.
    pub fn new(keys: Vec<SensorKey>) -> Result<Self, IngestError> {
        let mut lookup = HashMap::with_capacity(keys.len());
        for (i, key) in keys.iter().enumerate() {
            if lookup.insert(key.normalized(), i).is_some() {
                return Err(IngestError::SensorMap(format!(
                    "duplicate sensor {} {} {}",
                    key.location, key.kind, key.place
                )));
            }
        }
        Ok(SensorMap { keys, lookup })
    }

    /// The twelve-sensor layout of the Ordóñez house A recording.
    pub fn ordonez_a() -> Self {
        let keys = [
            ("Shower", "PIR", "Bathroom"),
            ("Basin", "PIR", "Bathroom"),
            ("Cooktop", "PIR", "Kitchen"),
            ("Maindoor", "Magnetic", "Entrance"),
            ("Fridge", "Magnetic", "Kitchen"),
            ("Cabinet", "Magnetic", "Bathroom"),
            ("Cupboard", "Magnetic", "Kitchen"),
            ("Toilet", "Flush", "Bathroom"),
            ("Seat", "Pressure", "Living"),
            ("Bed", "Pressure", "Bedroom"),
            ("Microwave", "Electric", "Kitchen"),
            ("Toaster", "Electric", "Kitchen"),
        ]
        .into_iter()
        .map(|(l, k, p)| SensorKey::new(l, k, p))
        .collect();
        SensorMap::new(keys).expect("built-in sensor map is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, IngestError> {
        let file: SensorMapFile =
            toml::from_str(text).map_err(|e| IngestError::SensorMap(e.to_string()))?;
        let n = file.sensors.len();
        let mut slots: Vec<Option<SensorKey>> = vec![None; n];
        for entry in file.sensors {
            let slot = slots.get_mut(entry.index).ok_or_else(|| {
                IngestError::SensorMap(format!("index {} outside 0..{n}", entry.index))
            })?;
            if slot.is_some() {
                return Err(IngestError::SensorMap(format!(
                    "index {} assigned twice",
                    entry.index
                )));
            }
            *slot = Some(entry.key);
        }
        // n entries, no duplicates, all in range: every slot is filled
        SensorMap::new(slots.into_iter().map(Option::unwrap).collect())
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        let file = SensorMapFile {
            sensors: self
                .keys
                .iter()
                .enumerate()
                .map(|(index, key)| SensorEntry {
                    index,
                    key: key.clone(),
                })
                .collect(),
        };
        toml::to_string(&file).expect("sensor map serializes")
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn index_of(&self, location: &str, kind: &str, place: &str) -> Option<usize> {
        self.lookup
            .get(&(
                location.to_ascii_lowercase(),
                kind.to_ascii_lowercase(),
                place.to_ascii_lowercase(),
            ))
            .copied()
    }

    pub fn key(&self, index: usize) -> Option<&SensorKey> {
        self.keys.get(index)
    }

    pub fn keys(&self) -> &[SensorKey] {
        &self.keys
    }
}
