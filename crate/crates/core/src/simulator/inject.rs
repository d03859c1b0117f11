use std::collections::{BTreeMap, HashMap};

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::anomaly::{Feature, GaussianStats, CI_Z};
use crate::ingest::{Day, Recording, TimeSlice, SLICES_PER_DAY, SLICE_SECONDS};
use crate::label::ActivityLabel::{self, *};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UseCase {
    FrequentToilet,
    AbnormalLeaving,
    AbnormalSleeping,
    ProlongedIdle,
    AbnormalEating,
}

impl UseCase {
    pub fn name(self) -> &'static str {
        match self {
            UseCase::FrequentToilet => "frequent_toilet",
            UseCase::AbnormalLeaving => "abnormal_leaving",
            UseCase::AbnormalSleeping => "abnormal_sleeping",
            UseCase::ProlongedIdle => "prolonged_idle",
            UseCase::AbnormalEating => "abnormal_eating",
        }
    }
}

impl std::fmt::Display for UseCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which feature a shift injection pushes out of its interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    Duration,
    StartHour,
}

pub const DEFAULT_TOILET_EXTRA: usize = 4;
pub const DEFAULT_IDLE_MINUTES: usize = 120;
pub const DEFAULT_SEVERITY: f64 = 1.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub use_case: UseCase,
    /// Zero-based day index into the base recording.
    pub day: usize,
    /// frequent_toilet: extra Toileting segments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// prolonged_idle: target idle length in minutes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minutes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ShiftMode>,
    /// abnormal_eating: which meal to shift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meal: Option<ActivityLabel>,
    /// Shift target as a multiple of the interval half-width past the mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<f64>,
}

impl Injection {
    pub fn new(use_case: UseCase, day: usize) -> Self {
        Injection { use_case, day, k: None, minutes: None, mode: None, meal: None, severity: None }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Param(format!("{} on day {}: {msg}", self.use_case, self.day)));
        let shift = matches!(
            self.use_case,
            UseCase::AbnormalLeaving | UseCase::AbnormalSleeping | UseCase::AbnormalEating
        );
        if let Some(k) = self.k {
            if self.use_case != UseCase::FrequentToilet || !(1..=12).contains(&k) {
                return bad(format!("k = {k} must be in 1..=12 and only for frequent_toilet"));
            }
        }
        if let Some(m) = self.minutes {
            if self.use_case != UseCase::ProlongedIdle || !(30..=720).contains(&m) {
                return bad(format!("minutes = {m} must be in 30..=720 and only for prolonged_idle"));
            }
        }
        if self.mode.is_some() && !shift {
            return bad("mode only applies to leaving, sleeping and eating".into());
        }
        if let Some(meal) = self.meal {
            if self.use_case != UseCase::AbnormalEating || !matches!(meal, Breakfast | Lunch | Dinner | Snack) {
                return bad(format!("meal = {meal} must be a meal and only for abnormal_eating"));
            }
        }
        if let Some(s) = self.severity {
            if !shift || !(1.05..=5.0).contains(&s) {
                return bad(format!("severity = {s} must be in [1.05, 5] and only for shift use cases"));
            }
        }
        Ok(())
    }
}

/// What an injection changed, for cross-checking detector output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub use_case: UseCase,
    pub day: usize,
    pub date: NaiveDate,
    pub label: ActivityLabel,
    /// Feature expected to be flagged.
    pub feature: Feature,
    /// `[start, end)` slice ranges of the affected segments.
    pub segments: Vec<(usize, usize)>,
}

/// Share of a label's slices above which its most frequent vector, even an
/// empty one, is its pattern.
pub const DOMINANT_SHARE: f64 = 0.8;

/// Sensor vector used for slices an injection relabels. This is the label's
/// most frequent vector when it covers at least [`DOMINANT_SHARE`] of the
/// label's slices, otherwise its most frequent non-empty vector; all zeros
/// for labels that never fire anything.
pub fn modal_patterns(recording: &Recording) -> BTreeMap<ActivityLabel, Vec<u8>> {
    let mut counts: HashMap<(ActivityLabel, &[u8]), usize> = HashMap::new();
    let mut totals: HashMap<ActivityLabel, usize> = HashMap::new();
    for s in recording.slices() {
        if let Some(y) = s.y {
            *counts.entry((y, &s.x)).or_default() += 1;
            *totals.entry(y).or_default() += 1;
        }
    }
    let mut best: BTreeMap<ActivityLabel, (usize, Vec<u8>)> = BTreeMap::new();
    let mut best_non_empty: BTreeMap<ActivityLabel, (usize, Vec<u8>)> = BTreeMap::new();
    for ((label, x), n) in counts {
        let mut tables = vec![&mut best];
        if x.iter().any(|&v| v != 0) {
            tables.push(&mut best_non_empty);
        }
        for table in tables {
            let entry = table.entry(label).or_insert((0, Vec::new()));
            // ties go to the lexicographically smallest vector
            if n > entry.0 || (n == entry.0 && x < entry.1.as_slice()) {
                *entry = (n, x.to_vec());
            }
        }
    }
    ActivityLabel::ALL
        .iter()
        .map(|&l| {
            let total = totals.get(&l).copied().unwrap_or(0);
            let pattern = match (best.remove(&l), best_non_empty.remove(&l)) {
                (Some((n, x)), _) if n as f64 >= DOMINANT_SHARE * total as f64 => x,
                (_, Some((_, x))) => x,
                _ => vec![0; recording.n_sensors],
            };
            (l, pattern)
        })
        .collect()
}

/// Fitted statistics and sensor patterns used to realize injections.
#[derive(Debug, Clone)]
pub struct InjectContext {
    pub stats: GaussianStats,
    pub modal: BTreeMap<ActivityLabel, Vec<u8>>,
}

impl InjectContext {
    fn pattern(&self, label: ActivityLabel, n_sensors: usize) -> Vec<u8> {
        self.modal.get(&label).cloned().unwrap_or_else(|| vec![0; n_sensors])
    }

    /// `mu + severity * z * sigma` of a feature, or an error when unusable.
    fn beyond(&self, label: ActivityLabel, feature: Feature, severity: f64) -> Result<f64, SimError> {
        let e = self.stats.usable(label, feature).ok_or(SimError::MissingStats(label))?;
        Ok(e.mu + severity * CI_Z * e.sigma)
    }
}

#[derive(Debug, Clone)]
struct Block {
    label: ActivityLabel,
    xs: Vec<Vec<u8>>,
}

fn is_slack(label: ActivityLabel) -> bool {
    matches!(label, IdleUnlabeled | SpareTimeTV)
}

fn blocks_of(day: &Day, index: usize) -> Result<Vec<Block>, SimError> {
    let mut blocks: Vec<Block> = Vec::new();
    for s in &day.slices {
        let label = s.y.ok_or(SimError::Unlabeled(index))?;
        match blocks.last_mut() {
            Some(b) if b.label == label => b.xs.push(s.x.clone()),
            _ => blocks.push(Block { label, xs: vec![s.x.clone()] }),
        }
    }
    Ok(blocks)
}

fn rebuild(date: NaiveDate, blocks: &[Block]) -> Day {
    let midnight = date.and_hms_opt(0, 0, 0).expect("midnight");
    let slices = blocks
        .iter()
        .flat_map(|b| b.xs.iter().map(move |x| (b.label, x)))
        .enumerate()
        .map(|(t, (label, x))| TimeSlice {
            t,
            wallclock: midnight + Duration::seconds(t as i64 * SLICE_SECONDS),
            x: x.clone(),
            y: Some(label),
        })
        .collect();
    Day { date, slices }
}

fn offset(blocks: &[Block], index: usize) -> usize {
    blocks[..index].iter().map(|b| b.xs.len()).sum()
}

fn longest(blocks: &[Block], keep: impl Fn(&Block) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, b) in blocks.iter().enumerate() {
        if keep(b) && best.is_none_or(|j| b.xs.len() > blocks[j].xs.len()) {
            best = Some(i);
        }
    }
    best
}

/// Removes `need` slices from idle / resting blocks other than `target`,
/// longest first, each keeping at least one slice. With `after_only`, only
/// blocks after `target` give time.
fn take_slack(blocks: &mut [Block], target: usize, need: usize, after_only: bool, day: usize) -> Result<(), SimError> {
    let mut donors: Vec<usize> = (0..blocks.len())
        .filter(|&i| i != target && is_slack(blocks[i].label) && (!after_only || i > target))
        .collect();
    donors.sort_by_key(|&i| (i < target, std::cmp::Reverse(blocks[i].xs.len()), i));
    let available: usize = donors.iter().map(|&i| blocks[i].xs.len() - 1).sum();
    if available < need {
        return Err(SimError::NotEnoughSlack { day, need, available });
    }
    let mut left = need;
    for i in donors {
        let take = left.min(blocks[i].xs.len() - 1);
        let len = blocks[i].xs.len();
        blocks[i].xs.truncate(len - take);
        left -= take;
        if left == 0 {
            break;
        }
    }
    Ok(())
}

/// Applies one use-case injection to a copy of `recording`.
pub fn inject(
    recording: &Recording,
    injection: &Injection,
    ctx: &InjectContext,
) -> Result<(Recording, InjectionRecord), SimError> {
    injection.validate()?;
    let index = injection.day;
    let day = recording
        .days
        .get(index)
        .ok_or(SimError::BadDay { day: index, days: recording.days.len() })?;
    let n = recording.n_sensors;
    let mut blocks = blocks_of(day, index)?;
    let use_case = injection.use_case;
    let no_segment = |label| SimError::NoSegment { day: index, use_case, label };

    let (label, feature, segments) = match use_case {
        UseCase::FrequentToilet => {
            let k = injection.k.unwrap_or(DEFAULT_TOILET_EXTRA);
            let len = ctx
                .stats
                .usable(Toileting, Feature::Duration)
                .map_or(4, |e| e.mu.round().clamp(2.0, 10.0) as usize);
            let host = longest(&blocks, |b| is_slack(b.label)).ok_or(no_segment(SpareTimeTV))?;
            let host_len = blocks[host].xs.len();
            if host_len < k * len + k + 1 {
                return Err(SimError::NotEnoughSlack { day: index, need: k * len + k + 1, available: host_len });
            }
            let piece = (host_len - k * len) / (k + 1);
            let base = offset(&blocks, host);
            let host_label = blocks[host].label;
            let toilet = ctx.pattern(Toileting, n);
            let mut parts = Vec::new();
            let mut segments = Vec::new();
            let mut xs = std::mem::take(&mut blocks[host].xs).into_iter();
            for i in 0..=k {
                let take = if i == k { xs.len() } else { piece };
                parts.push(Block { label: host_label, xs: xs.by_ref().take(take).collect() });
                if i < k {
                    let at = base + parts.iter().map(|b| b.xs.len()).sum::<usize>();
                    xs.by_ref().take(len).for_each(drop);
                    parts.push(Block { label: Toileting, xs: vec![toilet.clone(); len] });
                    segments.push((at, at + len));
                }
            }
            blocks.splice(host..=host, parts);
            (Toileting, Feature::Frequency, segments)
        }
        UseCase::ProlongedIdle => {
            let minutes = injection.minutes.unwrap_or(DEFAULT_IDLE_MINUTES);
            let target = longest(&blocks, |b| b.label == IdleUnlabeled).ok_or(no_segment(IdleUnlabeled))?;
            let need = minutes.checked_sub(blocks[target].xs.len()).filter(|&d| d > 0).ok_or_else(|| {
                SimError::Param(format!("prolonged_idle on day {index}: idle run already lasts {minutes} minutes"))
            })?;
            take_slack(&mut blocks, target, need, false, index)?;
            blocks[target].xs.extend(std::iter::repeat_n(ctx.pattern(IdleUnlabeled, n), need));
            let start = offset(&blocks, target);
            (IdleUnlabeled, Feature::Duration, vec![(start, start + blocks[target].xs.len())])
        }
        UseCase::AbnormalLeaving | UseCase::AbnormalSleeping | UseCase::AbnormalEating => {
            let label = match use_case {
                UseCase::AbnormalLeaving => Leaving,
                UseCase::AbnormalSleeping => Sleeping,
                _ => injection.meal.unwrap_or(Lunch),
            };
            let severity = injection.severity.unwrap_or(DEFAULT_SEVERITY);
            let target = longest(&blocks, |b| b.label == label).ok_or(no_segment(label))?;
            let len = blocks[target].xs.len();
            match injection.mode.unwrap_or(ShiftMode::Duration) {
                ShiftMode::Duration => {
                    let want = ctx.beyond(label, Feature::Duration, severity)?.ceil() as usize;
                    let need = want.saturating_sub(len).max(1);
                    take_slack(&mut blocks, target, need, false, index)?;
                    blocks[target].xs.extend(std::iter::repeat_n(ctx.pattern(label, n), need));
                    let start = offset(&blocks, target);
                    (label, Feature::Duration, vec![(start, start + blocks[target].xs.len())])
                }
                ShiftMode::StartHour => {
                    let start = offset(&blocks, target);
                    let want = (ctx.beyond(label, Feature::StartHour, severity)? * 60.0).ceil() as usize;
                    if want + len > SLICES_PER_DAY {
                        return Err(SimError::Param(format!(
                            "{use_case} on day {index}: cannot start {label} at slice {want} and end before midnight"
                        )));
                    }
                    let shift = want.saturating_sub(start).max(1);
                    take_slack(&mut blocks, target, shift, true, index)?;
                    let filler = if target > 0 && is_slack(blocks[target - 1].label) {
                        blocks[target - 1].label
                    } else {
                        IdleUnlabeled
                    };
                    let pad = Block { label: filler, xs: vec![ctx.pattern(filler, n); shift] };
                    blocks.insert(target, pad);
                    let start = offset(&blocks, target + 1);
                    (label, Feature::StartHour, vec![(start, start + len)])
                }
            }
        }
    };

    let mut out = recording.clone();
    out.days[index] = rebuild(day.date, &blocks);
    debug_assert_eq!(out.days[index].slices.len(), day.slices.len());
    let record = InjectionRecord { use_case, day: index, date: day.date, label, feature, segments };
    Ok((out, record))
}
