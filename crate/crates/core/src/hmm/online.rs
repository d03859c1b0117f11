use super::decode::{argmax, best_predecessor, LogParams};
use super::model::HmmModel;
use super::HmmError;
use crate::label::ActivityLabel;

/// Streaming Viterbi with a fixed decision lag.
///
/// After slice `t` is pushed, slice `t - lag` is committed from the backtrace
/// of the current best path. `finish_day` commits the rest of the day from the
/// full backtrace and restarts at the prior, so with `lag >= day length` the
/// output equals offline day-by-day Viterbi.
#[derive(Debug, Clone)]
pub struct FixedLagDecoder {
    params: LogParams,
    states: Vec<ActivityLabel>,
    n_sensors: usize,
    lag: usize,
    delta: Vec<f64>,
    back: Vec<Vec<usize>>,
    committed: usize,
}

impl FixedLagDecoder {
    pub fn new(model: &HmmModel, lag: usize) -> Self {
        FixedLagDecoder {
            params: LogParams::new(model),
            states: model.states.clone(),
            n_sensors: model.n_sensors,
            lag,
            delta: Vec::new(),
            back: Vec::new(),
            committed: 0,
        }
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Slices pushed since the start of the current day.
    pub fn pending_day_len(&self) -> usize {
        self.back.len()
    }

    /// Pushes one observation; returns `(day index, label)` pairs committed by it.
    pub fn push(&mut self, x: &[u8]) -> Result<Vec<(usize, ActivityLabel)>, HmmError> {
        if x.len() != self.n_sensors {
            return Err(HmmError::SensorCount {
                found: x.len(),
                expected: self.n_sensors,
            });
        }
        let n = self.params.n_states();
        if self.back.is_empty() {
            self.delta = (0..n).map(|j| self.params.prior[j] + self.params.emission(j, x)).collect();
            self.back.push(vec![0; n]);
        } else {
            let mut next = vec![0.0; n];
            let mut ptr = vec![0; n];
            for j in 0..n {
                let (i, score) = best_predecessor(&self.params, &self.delta, j);
                ptr[j] = i;
                next[j] = score + self.params.emission(j, x);
            }
            self.delta = next;
            self.back.push(ptr);
        }
        let t = self.back.len() - 1;
        if t >= self.lag && t - self.lag >= self.committed {
            let path = self.backtrace();
            let target = t - self.lag;
            let out = (self.committed..=target).map(|s| (s, self.states[path[s]])).collect();
            self.committed = target + 1;
            return Ok(out);
        }
        Ok(Vec::new())
    }

    /// Commits every uncommitted slice of the day and resets for the next one.
    pub fn finish_day(&mut self) -> Vec<(usize, ActivityLabel)> {
        let out = if self.back.is_empty() {
            Vec::new()
        } else {
            let path = self.backtrace();
            (self.committed..path.len()).map(|s| (s, self.states[path[s]])).collect()
        };
        self.delta.clear();
        self.back.clear();
        self.committed = 0;
        out
    }

    fn backtrace(&self) -> Vec<usize> {
        let len = self.back.len();
        let mut path = vec![0; len];
        let mut state = argmax(&self.delta);
        for t in (0..len).rev() {
            path[t] = state;
            state = self.back[t][state];
        }
        path
    }
}
