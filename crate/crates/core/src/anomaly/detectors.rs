use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    AnomalyError, AnomalyVerdict, ContextFeatures, DecisionTree, Explanation, Feature,
    FeaturizedSegment, TreeConfig,
};
use crate::label::ActivityLabel;
use crate::metrics::ConfusionMatrix;

/// Detector input: one-hot activity indicators followed by the feature's value.
pub fn encode_row(features: &ContextFeatures, feature: Feature) -> Vec<f64> {
    let mut row = vec![0.0; ActivityLabel::COUNT + 1];
    row[features.label.index()] = 1.0;
    row[ActivityLabel::COUNT] = features.value(feature);
    row
}

fn column_names(feature: Feature) -> Vec<String> {
    ActivityLabel::ALL
        .iter()
        .map(|l| format!("activity={l}"))
        .chain(std::iter::once(feature.column().to_string()))
        .collect()
}

/// One decision tree per contextual feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDetectors {
    pub config: TreeConfig,
    trees: BTreeMap<Feature, DecisionTree>,
}

impl FeatureDetectors {
    pub fn tree(&self, feature: Feature) -> &DecisionTree {
        &self.trees[&feature]
    }

    pub fn predict(&self, features: &ContextFeatures) -> BTreeMap<Feature, bool> {
        Feature::ALL
            .iter()
            .map(|&f| (f, self.tree(f).predict(&encode_row(features, f))))
            .collect()
    }

    pub fn explain(&self, feature: Feature, features: &ContextFeatures) -> Explanation {
        self.tree(feature).explain(&encode_row(features, feature))
    }
}

fn check_lengths(rows: &[FeaturizedSegment], labels: &[AnomalyVerdict]) -> Result<(), AnomalyError> {
    if rows.len() != labels.len() {
        return Err(AnomalyError::LengthMismatch {
            rows: rows.len(),
            labels: labels.len(),
        });
    }
    Ok(())
}

/// Trains the four trees to reproduce the per-feature rule flags.
pub fn train_detectors(
    rows: &[FeaturizedSegment],
    labels: &[AnomalyVerdict],
    config: TreeConfig,
) -> Result<FeatureDetectors, AnomalyError> {
    check_lengths(rows, labels)?;
    let mut trees = BTreeMap::new();
    for feature in Feature::ALL {
        let y: Vec<bool> = labels.iter().map(|v| v.flagged(feature)).collect();
        let positives = y.iter().filter(|&&b| b).count();
        if positives == 0 || positives == y.len() {
            return Err(AnomalyError::SingleClass(feature));
        }
        let x: Vec<Vec<f64>> = rows.iter().map(|r| encode_row(&r.features, feature)).collect();
        trees.insert(feature, DecisionTree::fit(column_names(feature), &x, &y, config));
    }
    Ok(FeatureDetectors { config, trees })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorMetrics {
    pub accuracy: f64,
    /// Support-weighted F1 over the normal and abnormal classes.
    pub f1: f64,
    pub f1_macro: f64,
    pub f1_abnormal: f64,
    pub rows: usize,
    pub abnormal_rows: usize,
}

impl DetectorMetrics {
    fn from_confusion(m: &ConfusionMatrix) -> Self {
        DetectorMetrics {
            accuracy: m.accuracy(),
            f1: m.weighted_f1(),
            f1_macro: m.macro_f1(),
            f1_abnormal: m.f1(1).unwrap_or(0.0),
            rows: m.total() as usize,
            abnormal_rows: m.counts()[1].iter().sum::<u64>() as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorReport {
    pub days: usize,
    pub per_feature: BTreeMap<Feature, DetectorMetrics>,
}

/// Leave-one-day-out scores of each tree against the rule flags.
pub fn evaluate_detectors_lodo(
    rows: &[FeaturizedSegment],
    labels: &[AnomalyVerdict],
    config: TreeConfig,
) -> Result<DetectorReport, AnomalyError> {
    check_lengths(rows, labels)?;
    let days: Vec<NaiveDate> = rows
        .iter()
        .map(|r| r.segment.day)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut per_feature = BTreeMap::new();
    for feature in Feature::ALL {
        let x: Vec<Vec<f64>> = rows.iter().map(|r| encode_row(&r.features, feature)).collect();
        let y: Vec<bool> = labels.iter().map(|v| v.flagged(feature)).collect();
        let folds: Vec<ConfusionMatrix> = days
            .par_iter()
            .map(|&held_out| {
                let (mut train_x, mut train_y) = (Vec::new(), Vec::new());
                let mut test = Vec::new();
                for (i, r) in rows.iter().enumerate() {
                    if r.segment.day == held_out {
                        test.push(i);
                    } else {
                        train_x.push(x[i].clone());
                        train_y.push(y[i]);
                    }
                }
                let tree = DecisionTree::fit(column_names(feature), &train_x, &train_y, config);
                let mut m = ConfusionMatrix::new(2);
                for i in test {
                    m.record(y[i] as usize, tree.predict(&x[i]) as usize);
                }
                m
            })
            .collect();
        let mut total = ConfusionMatrix::new(2);
        for m in &folds {
            total.merge(m);
        }
        per_feature.insert(feature, DetectorMetrics::from_confusion(&total));
    }
    Ok(DetectorReport {
        days: days.len(),
        per_feature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anomaly::ActivitySegment;
    use ActivityLabel::*;

    fn row(day: u32, label: ActivityLabel, duration: u32) -> FeaturizedSegment {
        FeaturizedSegment {
            segment: ActivitySegment {
                label,
                start_slice: 0,
                end_slice: duration as usize,
                day: NaiveDate::from_ymd_opt(2011, 11, day).unwrap(),
            },
            features: ContextFeatures {
                label,
                prev_label: None,
                transition_prob: if duration.is_multiple_of(3) { 0.01 } else { 0.3 },
                duration_min: duration,
                frequency_today: 1 + duration % 4,
                start_hour: (duration % 24) as f64,
            },
        }
    }

    fn verdict(r: &FeaturizedSegment) -> AnomalyVerdict {
        let f = &r.features;
        let limit = if f.label == Toileting { 10 } else { 60 };
        let flags: BTreeMap<Feature, bool> = [
            (Feature::Transition, f.transition_prob < 0.05),
            (Feature::Duration, f.duration_min > limit),
            (Feature::Frequency, f.frequency_today > 3),
            (Feature::StartHour, f.start_hour > 20.0),
        ]
        .into_iter()
        .collect();
        AnomalyVerdict {
            label: f.label,
            any: flags.values().any(|&b| b),
            flags,
            expected_next: Sleeping,
            above_expected: BTreeMap::new(),
        }
    }

    fn data() -> (Vec<FeaturizedSegment>, Vec<AnomalyVerdict>) {
        let mut rows = Vec::new();
        for day in 1..=6 {
            for d in 1..40u32 {
                rows.push(row(day, Toileting, d));
                rows.push(row(day, Sleeping, d * 3));
            }
        }
        let labels = rows.iter().map(verdict).collect();
        (rows, labels)
    }

    #[test]
    fn unlimited_trees_reproduce_training_labels() {
        let (rows, labels) = data();
        let config = TreeConfig { max_depth: None, min_leaf: 1 };
        let detectors = train_detectors(&rows, &labels, config).unwrap();
        for (r, v) in rows.iter().zip(&labels) {
            assert_eq!(detectors.predict(&r.features), v.flags);
        }
        // per-activity duration threshold needs the indicator split
        let e = detectors.explain(Feature::Duration, &row(1, Toileting, 30).features);
        assert!(e.abnormal);
        assert!(e.steps.iter().any(|s| s.feature == "duration_min"));
    }

    #[test]
    fn single_class_feature_is_named() {
        let (rows, mut labels) = data();
        for v in &mut labels {
            v.flags.insert(Feature::StartHour, false);
        }
        assert!(matches!(
            train_detectors(&rows, &labels, TreeConfig::default()),
            Err(AnomalyError::SingleClass(Feature::StartHour))
        ));
    }

    #[test]
    fn lodo_on_learnable_rules_is_near_perfect() {
        let (rows, labels) = data();
        let report = evaluate_detectors_lodo(&rows, &labels, TreeConfig::default()).unwrap();
        assert_eq!(report.days, 6);
        for (feature, m) in &report.per_feature {
            assert_eq!(m.rows, rows.len());
            assert!(m.accuracy > 0.95, "{feature}: {}", m.accuracy);
        }
    }
}
