use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decode::{decode, DecodeMode};
use super::train::train_ml;
use super::HmmError;
use crate::ingest::Recording;
use crate::label::ActivityLabel;
use crate::metrics::ConfusionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub smoothing: f64,
    pub mode: DecodeMode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            smoothing: 1.0,
            mode: DecodeMode::Viterbi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub held_out: NaiveDate,
    pub slices: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Micro accuracy over all held-out slices.
    pub accuracy: f64,
    /// Macro F1 over labels present in truth or predictions.
    pub f1_macro: f64,
    pub per_class_f1: BTreeMap<ActivityLabel, f64>,
    /// Rows are ground truth, columns predictions, in `ActivityLabel` order.
    pub confusion: Vec<Vec<u64>>,
    pub fold_reports: Vec<FoldReport>,
}

/// Leave-one-day-out cross-validation: each day is decoded by a model trained
/// on all the other days.
pub fn evaluate_lodo(recording: &Recording, options: EvalOptions) -> Result<EvalReport, HmmError> {
    let n_days = recording.days.len();
    if n_days < 2 {
        return Err(HmmError::TooFewDays(n_days));
    }
    let folds: Vec<(FoldReport, ConfusionMatrix)> = recording
        .days
        .par_iter()
        .map(|held_out| {
            let train = recording.select_days(|d| d.date != held_out.date);
            let model = train_ml(&train, options.smoothing)?;
            let mut confusion = ConfusionMatrix::new(ActivityLabel::COUNT);
            if !held_out.slices.is_empty() {
                let decoded = decode(&model, &held_out.slices, options.mode)?;
                for (slice, predicted) in held_out.slices.iter().zip(&decoded.path) {
                    let truth = slice.y.ok_or(HmmError::Unlabeled {
                        date: held_out.date,
                        t: slice.t,
                    })?;
                    confusion.record(truth.index(), predicted.index());
                }
            }
            let report = FoldReport {
                held_out: held_out.date,
                slices: held_out.slices.len(),
                accuracy: confusion.accuracy(),
            };
            Ok((report, confusion))
        })
        .collect::<Result<_, HmmError>>()?;

    let mut total = ConfusionMatrix::new(ActivityLabel::COUNT);
    let mut fold_reports = Vec::with_capacity(folds.len());
    for (report, confusion) in folds {
        total.merge(&confusion);
        fold_reports.push(report);
    }
    let per_class_f1 = ActivityLabel::ALL
        .iter()
        .filter_map(|&l| total.f1(l.index()).map(|f| (l, f)))
        .collect();
    Ok(EvalReport {
        accuracy: total.accuracy(),
        f1_macro: total.macro_f1(),
        per_class_f1,
        confusion: total.counts().to_vec(),
        fold_reports,
    })
}
