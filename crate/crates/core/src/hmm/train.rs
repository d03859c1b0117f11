use sha2::{Digest, Sha256};

use super::model::{HmmModel, MODEL_FORMAT_VERSION};
use super::HmmError;
use crate::ingest::Recording;
use crate::label::ActivityLabel;

/// Hex SHA-256 over the labels and sensor vectors of a recording.
pub fn recording_fingerprint(recording: &Recording) -> String {
    let mut hasher = Sha256::new();
    hasher.update((recording.n_sensors as u64).to_le_bytes());
    for day in &recording.days {
        hasher.update(day.date.to_string().as_bytes());
        for slice in &day.slices {
            hasher.update([slice.y.map_or(u8::MAX, |l| l.index() as u8)]);
            hasher.update(&slice.x);
        }
    }
    hex::encode(hasher.finalize())
}

/// Maximum-likelihood estimate from fully labeled slices with additive smoothing.
///
/// Transitions are counted within days only; the prior is estimated from each
/// day's first label. Every one of the eleven activities is a state.
pub fn train_ml(recording: &Recording, smoothing: f64) -> Result<HmmModel, HmmError> {
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(HmmError::BadSmoothing(smoothing));
    }
    if recording.total_slices() == 0 {
        return Err(HmmError::EmptyRecording);
    }
    let n_states = ActivityLabel::COUNT;
    let n_sensors = recording.n_sensors;
    let mut initial = vec![0u64; n_states];
    let mut transitions = vec![vec![0u64; n_states]; n_states];
    let mut occupancy = vec![0u64; n_states];
    let mut fired = vec![vec![0u64; n_sensors]; n_states];
    let mut n_days = 0u64;

    for day in &recording.days {
        let mut prev: Option<usize> = None;
        for slice in &day.slices {
            let label = slice.y.ok_or(HmmError::Unlabeled {
                date: day.date,
                t: slice.t,
            })?;
            if slice.x.len() != n_sensors {
                return Err(HmmError::SensorCount {
                    found: slice.x.len(),
                    expected: n_sensors,
                });
            }
            let i = label.index();
            match prev {
                None => {
                    initial[i] += 1;
                    n_days += 1;
                }
                Some(p) => transitions[p][i] += 1,
            }
            occupancy[i] += 1;
            for (k, &v) in slice.x.iter().enumerate() {
                if v != 0 {
                    fired[i][k] += 1;
                }
            }
            prev = Some(i);
        }
    }

    let alpha = smoothing;
    let normalize = |counts: &[u64], total: u64, label: ActivityLabel| {
        let denom = total as f64 + alpha * counts.len() as f64;
        if denom == 0.0 {
            return Err(HmmError::DegenerateCounts(label));
        }
        Ok(counts
            .iter()
            .map(|&c| (c as f64 + alpha) / denom)
            .collect::<Vec<f64>>())
    };

    let prior = normalize(&initial, n_days, ActivityLabel::ALL[0])?;
    let mut transition = Vec::with_capacity(n_states);
    let mut emission = Vec::with_capacity(n_states);
    for (i, label) in ActivityLabel::ALL.iter().enumerate() {
        let out: u64 = transitions[i].iter().sum();
        transition.push(normalize(&transitions[i], out, *label)?);
        let denom = occupancy[i] as f64 + 2.0 * alpha;
        let row: Vec<f64> = fired[i]
            .iter()
            .map(|&c| (c as f64 + alpha) / denom)
            .collect();
        if denom == 0.0 || row.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(HmmError::DegenerateCounts(*label));
        }
        emission.push(row);
    }

    let model = HmmModel {
        kind: "hmm-model".to_string(),
        format_version: MODEL_FORMAT_VERSION,
        states: ActivityLabel::ALL.to_vec(),
        n_sensors,
        prior,
        transition,
        emission,
        smoothing,
        fingerprint: recording_fingerprint(recording),
    };
    model.validate()?;
    Ok(model)
}
