//! Versioned on-disk artifacts: the HMM and the anomaly bundle fitted on top
//! of it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anomaly::{
    evaluate_detectors_lodo, featurize, fit_gaussians, gen_synthetic, label_marginals, rule_labels,
    segment, train_detectors, AnomalyError, DayPath, DetectorReport, FeatureDetectors, FeaturizedSegment,
    GaussianStats, TreeConfig,
};
use crate::hmm::{HmmError, HmmModel};
use crate::ingest::Recording;
use crate::label::ActivityLabel;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;
const BUNDLE_KIND: &str = "anomaly-bundle";
pub const MODEL_FILE: &str = "model.json";
pub const BUNDLE_FILE: &str = "anomaly.json";
/// Directory used when no path is given.
pub const ARTIFACTS_ENV: &str = "ADLMON_ARTIFACTS";

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: HmmError },
    #[error("{path}: {source}")]
    Bundle { path: PathBuf, source: AnomalyError },
    #[error(transparent)]
    Anomaly(#[from] AnomalyError),
    #[error("anomaly bundle was fitted on model {bundle}, loaded model is {model}")]
    ModelMismatch { bundle: String, model: String },
    #[error("recording has unlabeled slices on {0}")]
    Unlabeled(chrono::NaiveDate),
    #[error("no artifact directory given and {ARTIFACTS_ENV} is not set")]
    NoDirectory,
}

/// SHA-256 of the model's canonical JSON.
pub fn model_digest(model: &HmmModel) -> String {
    hex::encode(Sha256::digest(model.to_json_string().as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyBundle {
    pub kind: String,
    pub format_version: u32,
    pub model_digest: String,
    pub seed: u64,
    pub n_synth_days: i64,
    pub stats: GaussianStats,
    pub marginals: Vec<(ActivityLabel, f64)>,
    pub detectors: FeatureDetectors,
    /// Leave-one-day-out scores on the merged training rows.
    pub report: Option<DetectorReport>,
}

impl AnomalyBundle {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self, AnomalyError> {
        #[derive(Deserialize)]
        struct Header {
            kind: String,
            format_version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.kind != BUNDLE_KIND || header.format_version != BUNDLE_FORMAT_VERSION {
            return Err(AnomalyError::VersionMismatch {
                found: header.format_version,
                expected: BUNDLE_FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub seed: u64,
    pub n_synth_days: i64,
    pub tree: TreeConfig,
    /// Also run the leave-one-day-out detector evaluation.
    pub evaluate: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { seed: 7, n_synth_days: 21, tree: TreeConfig::default(), evaluate: true }
    }
}

/// Ground-truth segments of a labeled recording with their context features.
pub fn ground_truth_rows(recording: &Recording, model: &HmmModel) -> Result<Vec<FeaturizedSegment>, ArtifactError> {
    let mut days = Vec::with_capacity(recording.days.len());
    for day in &recording.days {
        let labels = day.labels().ok_or(ArtifactError::Unlabeled(day.date))?;
        days.push(DayPath { date: day.date, labels });
    }
    Ok(featurize(&segment(&days), model)?)
}

/// Fits Gaussians on the real segments, merges in synthetic segments, labels
/// everything with the interval rule and trains the four detectors.
pub fn fit_anomaly(recording: &Recording, model: &HmmModel, options: &FitOptions) -> Result<AnomalyBundle, ArtifactError> {
    let mut rows = ground_truth_rows(recording, model)?;
    let stats = fit_gaussians(&rows);
    let marginals = label_marginals(&rows);
    rows.extend(gen_synthetic(model, &stats, &marginals, options.n_synth_days, options.seed)?);
    let labels = rule_labels(&rows, &stats, model);
    let detectors = train_detectors(&rows, &labels, options.tree)?;
    let report = if options.evaluate {
        Some(evaluate_detectors_lodo(&rows, &labels, options.tree)?)
    } else {
        None
    };
    Ok(AnomalyBundle {
        kind: BUNDLE_KIND.into(),
        format_version: BUNDLE_FORMAT_VERSION,
        model_digest: model_digest(model),
        seed: options.seed,
        n_synth_days: options.n_synth_days,
        stats,
        marginals,
        detectors,
        report,
    })
}

/// Trains the HMM on `recording` and fits the anomaly bundle against it.
pub fn build_artifacts(recording: &Recording, smoothing: f64, options: &FitOptions) -> Result<Artifacts, ArtifactError> {
    let model = crate::hmm::train_ml(recording, smoothing)
        .map_err(|source| ArtifactError::Model { path: PathBuf::from("<training>"), source })?;
    let bundle = fit_anomaly(recording, &model, options)?;
    Artifacts::new(model, bundle)
}

/// A model and the anomaly bundle fitted against it.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub model: HmmModel,
    pub bundle: AnomalyBundle,
}

fn read(path: &Path) -> Result<String, ArtifactError> {
    std::fs::read_to_string(path).map_err(|source| ArtifactError::Io { path: path.into(), source })
}

fn write(path: &Path, text: &str) -> Result<(), ArtifactError> {
    std::fs::write(path, text).map_err(|source| ArtifactError::Io { path: path.into(), source })
}

impl Artifacts {
    pub fn new(model: HmmModel, bundle: AnomalyBundle) -> Result<Self, ArtifactError> {
        let digest = model_digest(&model);
        if bundle.model_digest != digest {
            return Err(ArtifactError::ModelMismatch { bundle: bundle.model_digest, model: digest });
        }
        Ok(Artifacts { model, bundle })
    }

    pub fn load_model(path: &Path) -> Result<HmmModel, ArtifactError> {
        HmmModel::from_json_str(&read(path)?).map_err(|source| ArtifactError::Model { path: path.into(), source })
    }

    pub fn load_bundle(path: &Path) -> Result<AnomalyBundle, ArtifactError> {
        AnomalyBundle::from_json_str(&read(path)?).map_err(|source| ArtifactError::Bundle { path: path.into(), source })
    }

    pub fn load(dir: &Path) -> Result<Self, ArtifactError> {
        let model = Self::load_model(&dir.join(MODEL_FILE))?;
        let bundle = Self::load_bundle(&dir.join(BUNDLE_FILE))?;
        Artifacts::new(model, bundle)
    }

    /// Loads from `dir`, or from `$ADLMON_ARTIFACTS` when `dir` is `None`.
    pub fn load_from(dir: Option<&Path>) -> Result<Self, ArtifactError> {
        match dir {
            Some(d) => Self::load(d),
            None => {
                let d = std::env::var_os(ARTIFACTS_ENV).ok_or(ArtifactError::NoDirectory)?;
                Self::load(Path::new(&d))
            }
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), ArtifactError> {
        std::fs::create_dir_all(dir).map_err(|source| ArtifactError::Io { path: dir.into(), source })?;
        write(&dir.join(MODEL_FILE), &self.model.to_json_string())?;
        write(&dir.join(BUNDLE_FILE), &self.bundle.to_json_string())
    }

    pub fn model_digest(&self) -> &str {
        &self.bundle.model_digest
    }

    pub fn bundle_digest(&self) -> String {
        hex::encode(Sha256::digest(self.bundle.to_json_string().as_bytes()))
    }
}
