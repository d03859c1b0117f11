use serde::{Deserialize, Serialize};

use super::{Feature, FeaturizedSegment};
use crate::label::ActivityLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEntry {
    pub label: ActivityLabel,
    pub feature: Feature,
    pub mu: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sigma: f64,
    pub n: usize,
}

impl GaussianEntry {
    pub fn usable(&self) -> bool {
        self.n >= 2
    }

    pub fn from_samples(label: ActivityLabel, feature: Feature, samples: &[f64]) -> Self {
        let n = samples.len();
        let mu = if n == 0 { 0.0 } else { samples.iter().sum::<f64>() / n as f64 };
        let sigma = if n < 2 {
            0.0
        } else {
            (samples.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        GaussianEntry { label, feature, mu, sigma, n }
    }
}

/// Per-activity Gaussian priors for duration, frequency and start hour.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GaussianStats {
    entries: Vec<GaussianEntry>,
}

impl GaussianStats {
    pub fn from_entries(mut entries: Vec<GaussianEntry>) -> Self {
        entries.sort_by_key(|e| (e.label, e.feature));
        entries.dedup_by_key(|e| (e.label, e.feature));
        GaussianStats { entries }
    }

    pub fn get(&self, label: ActivityLabel, feature: Feature) -> Option<&GaussianEntry> {
        self.entries
            .binary_search_by_key(&(label, feature), |e| (e.label, e.feature))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Entry if it has at least two samples.
    pub fn usable(&self, label: ActivityLabel, feature: Feature) -> Option<&GaussianEntry> {
        self.get(label, feature).filter(|e| e.usable())
    }

    pub fn entries(&self) -> &[GaussianEntry] {
        &self.entries
    }
}

/// Sample mean and standard deviation per (activity, feature).
pub fn fit_gaussians(rows: &[FeaturizedSegment]) -> GaussianStats {
    let mut entries = Vec::new();
    for label in ActivityLabel::ALL {
        let of_label: Vec<_> = rows.iter().filter(|r| r.features.label == label).collect();
        if of_label.is_empty() {
            continue;
        }
        for feature in Feature::GAUSSIAN {
            let samples: Vec<f64> = of_label.iter().map(|r| r.features.value(feature)).collect();
            entries.push(GaussianEntry::from_samples(label, feature, &samples));
        }
    }
    GaussianStats::from_entries(entries)
}
