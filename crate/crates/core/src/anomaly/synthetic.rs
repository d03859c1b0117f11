use chrono::NaiveDate;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use super::features::FeatureState;
use super::{ActivitySegment, AnomalyError, Feature, FeaturizedSegment, GaussianStats};
use crate::hmm::HmmModel;
use crate::ingest::SLICES_PER_DAY;
use crate::label::ActivityLabel;

/// Synthetic days are dated from here so they never collide with real ones.
pub const SYNTHETIC_EPOCH: NaiveDate = match NaiveDate::from_ymd_opt(2000, 1, 1) {
    Some(d) => d,
    None => panic!("valid date"),
};

/// Relative frequency of each label among the segments.
pub fn label_marginals(rows: &[FeaturizedSegment]) -> Vec<(ActivityLabel, f64)> {
    let mut counts = [0usize; ActivityLabel::COUNT];
    for r in rows {
        counts[r.features.label.index()] += 1;
    }
    let total = rows.len().max(1) as f64;
    ActivityLabel::ALL
        .iter()
        .filter(|l| counts[l.index()] > 0)
        .map(|&l| (l, counts[l.index()] as f64 / total))
        .collect()
}

/// Draws activity labels from `marginals` and durations from each label's
/// duration Gaussian (rounded, at least one minute), back to back, until
/// `n_days` of time is filled.
///
/// Consecutive draws of the same label are redrawn. A segment belongs to the
/// day it starts in; the last one of a day may run past midnight.
pub fn gen_synthetic(
    model: &HmmModel,
    stats: &GaussianStats,
    marginals: &[(ActivityLabel, f64)],
    n_days: i64,
    seed: u64,
) -> Result<Vec<FeaturizedSegment>, AnomalyError> {
    if n_days <= 0 {
        return Err(AnomalyError::BadDayCount(n_days));
    }
    let weights: Vec<f64> = marginals.iter().map(|(_, w)| *w).collect();
    let chooser = WeightedIndex::new(&weights).map_err(|_| AnomalyError::BadMarginals)?;
    let mut durations = Vec::with_capacity(marginals.len());
    for &(label, weight) in marginals {
        let entry = stats.usable(label, Feature::Duration);
        match entry {
            Some(e) => durations.push(Normal::new(e.mu, e.sigma).map_err(|_| AnomalyError::MissingStats(label))?),
            None if weight <= 0.0 => durations.push(Normal::new(1.0, 0.0).expect("valid")),
            None => return Err(AnomalyError::MissingStats(label)),
        }
    }
    let distinct = weights.iter().filter(|w| **w > 0.0).count();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n_days as usize * SLICES_PER_DAY;
    let mut state = FeatureState::default();
    let mut out = Vec::new();
    let mut prev: Option<(NaiveDate, usize)> = None;
    let mut t = 0usize;
    while t < total {
        let day_index = t / SLICES_PER_DAY;
        let date = SYNTHETIC_EPOCH + chrono::Duration::days(day_index as i64);
        let mut pick = chooser.sample(&mut rng);
        while distinct > 1 && prev == Some((date, pick)) {
            pick = chooser.sample(&mut rng);
        }
        let (label, _) = marginals[pick];
        let minutes = durations[pick].sample(&mut rng).round().max(1.0) as usize;
        let start_slice = t % SLICES_PER_DAY;
        let segment = ActivitySegment {
            label,
            start_slice,
            end_slice: start_slice + minutes,
            day: date,
        };
        let features = state.next(&segment, model)?;
        out.push(FeaturizedSegment { segment, features });
        prev = Some((date, pick));
        t += minutes;
    }
    Ok(out)
}
