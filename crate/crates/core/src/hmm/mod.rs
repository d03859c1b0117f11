//! Hidden Markov model over activity labels with independent-Bernoulli sensor
//! emissions: maximum-likelihood training, Viterbi / posterior decoding, and
//! leave-one-day-out evaluation.

mod decode;
mod eval;
mod model;
mod online;
mod train;

pub use decode::{decode, decode_observations, path_log_likelihood, DecodeMode, DecodeResult};
pub use eval::{evaluate_lodo, EvalOptions, EvalReport, FoldReport};
pub use model::{HmmModel, MODEL_FORMAT_VERSION};
pub use online::FixedLagDecoder;
pub use train::{recording_fingerprint, train_ml};

#[derive(Debug, thiserror::Error)]
pub enum HmmError {
    #[error("training data is empty")]
    EmptyRecording,
    #[error("slice {t} of {date} has no ground-truth label")]
    Unlabeled { date: chrono::NaiveDate, t: usize },
    #[error("smoothing must be finite and >= 0, got {0}")]
    BadSmoothing(f64),
    #[error("zero counts for state {0} with smoothing 0; use smoothing > 0")]
    DegenerateCounts(crate::ActivityLabel),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("observation sequence is empty")]
    EmptyObservations,
    #[error("observation has {found} sensors, model expects {expected}")]
    SensorCount { found: usize, expected: usize },
    #[error("no label sequence has nonzero probability")]
    NoFeasiblePath,
    #[error("leave-one-day-out needs at least 2 days, got {0}")]
    TooFewDays(usize),
    #[error("model file: {0}")]
    Serde(#[from] serde_json::Error),
}
