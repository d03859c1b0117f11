//! Confusion-matrix based classification metrics.

use serde::{Deserialize, Serialize};

/// Square confusion matrix; rows are ground truth, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    fn support(&self, class: usize) -> (u64, u64) {
        let actual: u64 = self.counts[class].iter().sum();
        let predicted: u64 = self.counts.iter().map(|row| row[class]).sum();
        (actual, predicted)
    }

    /// F1 of one class, `None` when the class appears neither in truth nor predictions.
    pub fn f1(&self, class: usize) -> Option<f64> {
        let (actual, predicted) = self.support(class);
        if actual + predicted == 0 {
            return None;
        }
        let tp = self.counts[class][class];
        Some(2.0 * tp as f64 / (actual + predicted) as f64)
    }

    /// Unweighted mean of per-class F1 over classes present in truth or predictions.
    pub fn macro_f1(&self) -> f64 {
        let scores: Vec<f64> = (0..self.n_classes()).filter_map(|c| self.f1(c)).collect();
        if scores.is_empty() {
            0.0
        } else {
            scores.iter().sum::<f64>() / scores.len() as f64
        }
    }

    /// Per-class F1 weighted by true-class support.
    pub fn weighted_f1(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..self.n_classes())
            .map(|c| {
                let (actual, _) = self.support(c);
                actual as f64 * self.f1(c).unwrap_or(0.0)
            })
            .sum::<f64>()
            / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_scores() {
        // truth:     0 0 0 1 1 2
        // predicted: 0 0 1 1 1 0
        let mut m = ConfusionMatrix::new(4);
        for (t, p) in [(0, 0), (0, 0), (0, 1), (1, 1), (1, 1), (2, 0)] {
            m.record(t, p);
        }
        assert_eq!(m.total(), 6);
        assert!((m.accuracy() - 4.0 / 6.0).abs() < 1e-12);
        // class 0: tp 2, actual 3, predicted 3 -> 2/3
        assert!((m.f1(0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        // class 1: tp 2, actual 2, predicted 3 -> 0.8
        assert!((m.f1(1).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(m.f1(2), Some(0.0));
        assert_eq!(m.f1(3), None);
        let expected = (2.0 / 3.0 + 0.8 + 0.0) / 3.0;
        assert!((m.macro_f1() - expected).abs() < 1e-12);
        let weighted = (3.0 * 2.0 / 3.0 + 2.0 * 0.8 + 0.0) / 6.0;
        assert!((m.weighted_f1() - weighted).abs() < 1e-12);
    }
}
