use serde::{Deserialize, Serialize};

use super::HmmError;
use crate::label::ActivityLabel;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_KIND: &str = "hmm-model";
const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// A trained activity HMM. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    pub kind: String,
    pub format_version: u32,
    pub states: Vec<ActivityLabel>,
    pub n_sensors: usize,
    /// `prior[i]` = p(y_1 = i)
    pub prior: Vec<f64>,
    /// `transition[i][j]` = p(y_t = j | y_{t-1} = i)
    pub transition: Vec<Vec<f64>>,
    /// `emission[i][k]` = p(sensor k fires | y = i)
    pub emission: Vec<Vec<f64>>,
    pub smoothing: f64,
    /// Hash of the training data.
    pub fingerprint: String,
}

impl HmmModel {
    /// Assembles and validates a model from explicit parameters.
    pub fn new(
        states: Vec<ActivityLabel>,
        prior: Vec<f64>,
        transition: Vec<Vec<f64>>,
        emission: Vec<Vec<f64>>,
    ) -> Result<Self, HmmError> {
        let n_sensors = emission.first().map_or(0, Vec::len);
        let model = HmmModel {
            kind: MODEL_KIND.to_string(),
            format_version: MODEL_FORMAT_VERSION,
            states,
            n_sensors,
            prior,
            transition,
            emission,
            smoothing: 0.0,
            fingerprint: String::new(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: ActivityLabel) -> Option<usize> {
        self.states.iter().position(|&s| s == label)
    }

    /// p(y_t = to | y_{t-1} = from); `None` if either label is not a state.
    pub fn transition_prob(&self, from: ActivityLabel, to: ActivityLabel) -> Option<f64> {
        Some(self.transition[self.state_index(from)?][self.state_index(to)?])
    }

    pub fn prior_prob(&self, label: ActivityLabel) -> Option<f64> {
        Some(self.prior[self.state_index(label)?])
    }

    pub fn validate(&self) -> Result<(), HmmError> {
        let n = self.states.len();
        let bad = |msg: String| Err(HmmError::InvalidModel(msg));
        if n == 0 {
            return bad("no states".into());
        }
        if self.prior.len() != n || self.transition.len() != n || self.emission.len() != n {
            return bad("parameter shapes do not match the state count".into());
        }
        let row_ok = |row: &[f64]| {
            row.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p))
                && (row.iter().sum::<f64>() - 1.0).abs() <= STOCHASTIC_TOLERANCE
        };
        if !row_ok(&self.prior) {
            return bad("prior is not a probability vector".into());
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.len() != n || !row_ok(row) {
                return bad(format!("transition row {i} is not stochastic"));
            }
        }
        for (i, row) in self.emission.iter().enumerate() {
            if row.len() != self.n_sensors {
                return bad(format!("emission row {i} has the wrong sensor count"));
            }
            if let Some(p) = row.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
                return bad(format!("emission row {i} has entry {p} outside (0, 1)"));
            }
        }
        let mut seen = self.states.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != n {
            return bad("duplicate states".into());
        }
        Ok(())
    }

    /// Most likely activity to follow `from`, excluding staying in `from`;
    /// ties go to the lowest state index.
    pub fn expected_next(&self, from: Option<ActivityLabel>) -> ActivityLabel {
        let (row, exclude) = match from.and_then(|l| self.state_index(l)) {
            Some(i) => (&self.transition[i], Some(i)),
            None => (&self.prior, None),
        };
        self.states[argmax_excluding(row, exclude)]
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self, HmmError> {
        #[derive(Deserialize)]
        struct Header {
            kind: String,
            format_version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.kind != MODEL_KIND {
            return Err(HmmError::InvalidModel(format!(
                "expected kind `{MODEL_KIND}`, found `{}`",
                header.kind
            )));
        }
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(HmmError::VersionMismatch {
                found: header.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let model: HmmModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

/// Index of the largest entry, skipping `exclude`; lowest index on ties.
pub fn argmax_excluding(row: &[f64], exclude: Option<usize>) -> usize {
    let mut best: Option<usize> = None;
    for (j, &p) in row.iter().enumerate() {
        if Some(j) == exclude {
            continue;
        }
        if best.is_none_or(|b| p > row[b]) {
            best = Some(j);
        }
    }
    best.unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActivityLabel::*;

    fn toy() -> HmmModel {
        HmmModel::new(
            vec![Sleeping, Toileting, Leaving],
            vec![0.5, 0.25, 0.25],
            vec![
                vec![0.9, 0.07, 0.03],
                vec![0.2, 0.7, 0.1],
                vec![0.1, 0.1, 0.8],
            ],
            vec![vec![0.9, 0.1], vec![0.2, 0.6], vec![0.3, 0.3]],
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut model = toy();
        model.transition[0] = vec![1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0];
        model.emission[2][1] = 0.1 + 0.2;
        let back = HmmModel::from_json_str(&model.to_json_string()).unwrap();
        assert_eq!(back, model);
        for (a, b) in back.transition.iter().flatten().zip(model.transition.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_other_versions() {
        let text = toy().to_json_string().replace("\"format_version\": 1", "\"format_version\": 7");
        assert!(matches!(
            HmmModel::from_json_str(&text),
            Err(HmmError::VersionMismatch { found: 7, expected: 1 })
        ));
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let err = HmmModel::new(
            vec![Sleeping, Toileting],
            vec![0.5, 0.5],
            vec![vec![0.5, 0.4], vec![0.5, 0.5]],
            vec![vec![0.5], vec![0.5]],
        );
        assert!(err.is_err());
        let err = HmmModel::new(
            vec![Sleeping, Toileting],
            vec![0.5, 0.5],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![vec![1.0], vec![0.5]],
        );
        assert!(err.is_err());
    }

    #[test]
    fn expected_next_skips_self_transition() {
        let model = toy();
        assert_eq!(model.expected_next(Some(Sleeping)), Toileting);
        assert_eq!(model.expected_next(Some(Toileting)), Sleeping);
        assert_eq!(model.expected_next(None), Sleeping);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax_excluding(&[0.2, 0.4, 0.4], None), 1);
        assert_eq!(argmax_excluding(&[0.2, 0.4, 0.4], Some(1)), 2);
    }
}
