use serde::{Deserialize, Serialize};

use super::model::HmmModel;
use super::HmmError;
use crate::ingest::TimeSlice;
use crate::label::ActivityLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    /// Most likely label sequence.
    #[default]
    Viterbi,
    /// Per-slice argmax of the posterior marginals.
    Posterior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub path: Vec<ActivityLabel>,
    /// Joint log-probability of `path` and the observations.
    pub log_likelihood: f64,
}

/// Log-space model parameters.
#[derive(Debug, Clone)]
pub(crate) struct LogParams {
    pub prior: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    log_on: Vec<Vec<f64>>,
    log_off: Vec<Vec<f64>>,
}

impl LogParams {
    pub fn new(model: &HmmModel) -> Self {
        LogParams {
            prior: model.prior.iter().map(|p| p.ln()).collect(),
            transition: model
                .transition
                .iter()
                .map(|row| row.iter().map(|p| p.ln()).collect())
                .collect(),
            log_on: model
                .emission
                .iter()
                .map(|row| row.iter().map(|p| p.ln()).collect())
                .collect(),
            log_off: model
                .emission
                .iter()
                .map(|row| row.iter().map(|p| (1.0 - p).ln()).collect())
                .collect(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.prior.len()
    }

    /// log p(x | y = state) under independent Bernoulli sensors.
    pub fn emission(&self, state: usize, x: &[u8]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(k, &v)| {
                if v != 0 {
                    self.log_on[state][k]
                } else {
                    self.log_off[state][k]
                }
            })
            .sum()
    }
}

fn check_observations(model: &HmmModel, obs: &[&[u8]]) -> Result<(), HmmError> {
    if obs.is_empty() {
        return Err(HmmError::EmptyObservations);
    }
    if let Some(x) = obs.iter().find(|x| x.len() != model.n_sensors) {
        return Err(HmmError::SensorCount {
            found: x.len(),
            expected: model.n_sensors,
        });
    }
    Ok(())
}

/// Decodes one contiguous sequence of slices, starting from the prior.
pub fn decode(model: &HmmModel, slices: &[TimeSlice], mode: DecodeMode) -> Result<DecodeResult, HmmError> {
    let obs: Vec<&[u8]> = slices.iter().map(|s| s.x.as_slice()).collect();
    decode_observations(model, &obs, mode)
}

pub fn decode_observations(
    model: &HmmModel,
    obs: &[&[u8]],
    mode: DecodeMode,
) -> Result<DecodeResult, HmmError> {
    check_observations(model, obs)?;
    let params = LogParams::new(model);
    let states = match mode {
        DecodeMode::Viterbi => viterbi(&params, obs),
        DecodeMode::Posterior => posterior_argmax(&params, obs),
    };
    let log_likelihood = joint_log_likelihood(&params, obs, &states);
    if !log_likelihood.is_finite() {
        return Err(HmmError::NoFeasiblePath);
    }
    Ok(DecodeResult {
        path: states.iter().map(|&i| model.states[i]).collect(),
        log_likelihood,
    })
}

/// log p(path, observations).
pub fn path_log_likelihood(model: &HmmModel, obs: &[&[u8]], path: &[ActivityLabel]) -> Result<f64, HmmError> {
    check_observations(model, obs)?;
    let states: Option<Vec<usize>> = path.iter().map(|&l| model.state_index(l)).collect();
    let states = states.ok_or_else(|| HmmError::InvalidModel("path label is not a model state".into()))?;
    if states.len() != obs.len() {
        return Err(HmmError::InvalidModel("path and observation lengths differ".into()));
    }
    Ok(joint_log_likelihood(&LogParams::new(model), obs, &states))
}

fn joint_log_likelihood(params: &LogParams, obs: &[&[u8]], states: &[usize]) -> f64 {
    let mut total = params.prior[states[0]] + params.emission(states[0], obs[0]);
    for t in 1..obs.len() {
        total += params.transition[states[t - 1]][states[t]] + params.emission(states[t], obs[t]);
    }
    total
}

/// Viterbi recursion. Ties resolve to the lowest state index.
pub(crate) fn viterbi(params: &LogParams, obs: &[&[u8]]) -> Vec<usize> {
    let n = params.n_states();
    let mut delta: Vec<f64> = (0..n).map(|j| params.prior[j] + params.emission(j, obs[0])).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(obs.len());
    back.push(vec![0; n]);
    let mut next = vec![0.0; n];
    for x in &obs[1..] {
        let mut ptr = vec![0; n];
        for j in 0..n {
            let (best_i, best) = best_predecessor(params, &delta, j);
            ptr[j] = best_i;
            next[j] = best + params.emission(j, x);
        }
        std::mem::swap(&mut delta, &mut next);
        back.push(ptr);
    }
    let mut state = argmax(&delta);
    let mut path = vec![0; obs.len()];
    for t in (0..obs.len()).rev() {
        path[t] = state;
        state = back[t][state];
    }
    path
}

pub(crate) fn best_predecessor(params: &LogParams, delta: &[f64], j: usize) -> (usize, f64) {
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, d) in delta.iter().enumerate() {
        let score = d + params.transition[i][j];
        if score > best {
            best = score;
            best_i = i;
        }
    }
    (best_i, best)
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn posterior_argmax(params: &LogParams, obs: &[&[u8]]) -> Vec<usize> {
    let n = params.n_states();
    let t_len = obs.len();
    let mut alpha = vec![vec![0.0; n]; t_len];
    for (j, a) in alpha[0].iter_mut().enumerate() {
        *a = params.prior[j] + params.emission(j, obs[0]);
    }
    for t in 1..t_len {
        for j in 0..n {
            let prev = &alpha[t - 1];
            alpha[t][j] = log_sum_exp((0..n).map(|i| prev[i] + params.transition[i][j]))
                + params.emission(j, obs[t]);
        }
    }
    let mut beta = vec![vec![0.0; n]; t_len];
    for t in (0..t_len - 1).rev() {
        for i in 0..n {
            let next = &beta[t + 1];
            beta[t][i] = log_sum_exp(
                (0..n).map(|j| params.transition[i][j] + params.emission(j, obs[t + 1]) + next[j]),
            );
        }
    }
    (0..t_len)
        .map(|t| {
            let gamma: Vec<f64> = (0..n).map(|j| alpha[t][j] + beta[t][j]).collect();
            argmax(&gamma)
        })
        .collect()
}
