//! Trial-based search over finite hyperparameter grids.

mod space;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};

pub use space::{
    classifier_from_point, external_model_config, tfidf_from_point, Dimension, ParamValue,
    SearchSpace, TrialPoint,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    /// Value index chosen in each dimension, in space order.
    pub choice: Vec<usize>,
    pub params: TrialPoint,
    /// `None` when the objective failed; such trials rank below every success.
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_ms: f64,
}

impl TrialRecord {
    pub fn score(&self) -> f64 {
        self.objective.unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    #[default]
    Random,
    Adaptive,
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerKind::Random => "random",
            SamplerKind::Adaptive => "adaptive",
        })
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(SamplerKind::Random),
            "adaptive" => Ok(SamplerKind::Adaptive),
            other => Err(Error::Config(format!("unknown sampler `{other}`"))),
        }
    }
}

/// Proposes the next point given the finished trials.
pub trait Sampler {
    fn sample(&mut self, space: &SearchSpace, history: &[TrialRecord]) -> Vec<usize>;
}

/// Independent uniform draw per dimension.
pub struct RandomSampler {
    rng: Rng,
}

impl RandomSampler {
    pub fn new(seed: u64) -> Self {
        RandomSampler { rng: seeded(seed) }
    }
}

impl Sampler for RandomSampler {
    fn sample(&mut self, space: &SearchSpace, _history: &[TrialRecord]) -> Vec<usize> {
        space
            .dims
            .iter()
            .map(|d| self.rng.random_range(0..d.values.len()))
            .collect()
    }
}

/// Categorical frequency sampler: after `n_startup` uniform trials, each
/// value is drawn with weight `1 + (times it appears in the top-gamma
/// fraction of successful trials)`, independently per dimension.
pub struct AdaptiveSampler {
    rng: Rng,
    pub gamma: f64,
    pub n_startup: usize,
}

impl AdaptiveSampler {
    pub fn new(seed: u64) -> Self {
        AdaptiveSampler {
            rng: seeded(seed),
            gamma: 0.25,
            n_startup: 5,
        }
    }

    /// Draw weights per dimension implied by `history`.
    pub fn weights(&self, space: &SearchSpace, history: &[TrialRecord]) -> Vec<Vec<f64>> {
        let mut done: Vec<&TrialRecord> = history.iter().filter(|t| t.objective.is_some()).collect();
        let mut w: Vec<Vec<f64>> = space.dims.iter().map(|d| vec![1.0; d.values.len()]).collect();
        if done.len() < self.n_startup {
            return w;
        }
        done.sort_by(|a, b| b.score().total_cmp(&a.score()).then(a.index.cmp(&b.index)));
        let top = ((self.gamma * done.len() as f64).ceil() as usize).max(1);
        for t in &done[..top] {
            for (d, &c) in t.choice.iter().enumerate() {
                if let Some(slot) = w.get_mut(d).and_then(|v| v.get_mut(c)) {
                    *slot += 1.0;
                }
            }
        }
        w
    }
}

impl Sampler for AdaptiveSampler {
    fn sample(&mut self, space: &SearchSpace, history: &[TrialRecord]) -> Vec<usize> {
        let weights = self.weights(space, history);
        weights
            .iter()
            .map(|w| {
                WeightedIndex::new(w)
                    .expect("positive weights")
                    .sample(&mut self.rng)
            })
            .collect()
    }
}

pub fn make_sampler(kind: SamplerKind, seed: u64) -> Box<dyn Sampler> {
    match kind {
        SamplerKind::Random => Box::new(RandomSampler::new(seed)),
        SamplerKind::Adaptive => Box::new(AdaptiveSampler::new(seed)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_index: usize,
    pub best: TrialPoint,
    pub best_objective: Option<f64>,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub trials: Vec<TrialRecord>,
}

/// Runs `n_trials` sequential trials, maximising `objective`. The best trial
/// is the first one that attains the maximum; failed trials score −∞.
pub fn run_search<F>(
    space: &SearchSpace,
    n_trials: usize,
    sampler: SamplerKind,
    seed: u64,
    mut objective: F,
) -> Result<SearchResult>
where
    F: FnMut(&TrialPoint) -> Result<f64>,
{
    if n_trials == 0 {
        return Err(Error::Config("n_trials must be >= 1".into()));
    }
    let space = SearchSpace::new(space.dims.clone())?;
    let mut s = make_sampler(sampler, seed);
    let mut trials: Vec<TrialRecord> = Vec::with_capacity(n_trials);
    for index in 0..n_trials {
        let choice = s.sample(&space, &trials);
        let params = space.point(&choice);
        let start = Instant::now();
        let outcome = objective(&params);
        let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        let (objective, error) = match outcome {
            Ok(v) if v.is_nan() => (None, Some("objective is NaN".to_string())),
            Ok(v) => (Some(v), None),
            Err(e) => {
                warn!("trial {index} failed: {e}");
                (None, Some(e.to_string()))
            }
        };
        info!("trial {index}: objective {objective:?}");
        trials.push(TrialRecord {
            index,
            choice,
            params,
            objective,
            error,
            wall_time_ms,
        });
    }
    let mut best_index = 0;
    for t in &trials {
        if t.score() > trials[best_index].score() {
            best_index = t.index;
        }
    }
    Ok(SearchResult {
        best_index,
        best: trials[best_index].params.clone(),
        best_objective: trials[best_index].objective,
        sampler,
        seed,
        trials,
    })
}
