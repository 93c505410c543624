use super::seed::congestion_seed;
use super::tpe::{tpe_suggest, TpeParams};
use super::{PlannerError, SearchSpace};
use crate::scheduling::BessConfig;
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Result of evaluating one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Return in $; `-inf` for a failed evaluation.
    pub r: f64,
    /// Refreshed congestion score per catalog entry.
    pub scores: Option<Vec<f64>>,
    pub failure: Option<String>,
}

impl Evaluation {
    pub fn failed(msg: impl Into<String>) -> Self {
        Self { r: f64::NEG_INFINITY, scores: None, failure: Some(msg.into()) }
    }
}

/// Scores a configuration. Implementations must be deterministic.
pub trait Evaluator {
    fn evaluate(&self, config: &BessConfig) -> Evaluation;
}

mod neg_inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub config: BessConfig,
    /// `null` in JSON when the evaluation failed.
    #[serde(with = "neg_inf_as_null")]
    pub r: f64,
    pub scores: Option<Vec<f64>>,
    pub failure: Option<String>,
    /// Seconds; kept out of the serialized history so reruns are identical.
    #[serde(skip)]
    pub wall_time: f64,
}

/// Ignores `wall_time`.
impl PartialEq for Trial {
    fn eq(&self, o: &Self) -> bool {
        self.index == o.index
            && self.config == o.config
            && self.r == o.r
            && self.scores == o.scores
            && self.failure == o.failure
    }
}

impl Trial {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none() && self.r.is_finite()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchHistory {
    pub trials: Vec<Trial>,
    /// First trial attaining the largest return.
    pub best: Option<usize>,
}

impl SearchHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds the best-so-far index from the trials alone.
    pub fn from_trials(trials: Vec<Trial>) -> Self {
        let mut h = Self::new();
        for t in trials {
            h.push(t);
        }
        h
    }

    pub fn push(&mut self, trial: Trial) {
        let idx = self.trials.len();
        let better = match self.best {
            None => trial.r > f64::NEG_INFINITY,
            Some(b) => trial.r > self.trials[b].r,
        };
        if better {
            self.best = Some(idx);
        }
        self.trials.push(trial);
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn best_trial(&self) -> Option<&Trial> {
        self.best.map(|b| &self.trials[b])
    }

    pub fn any_success(&self) -> bool {
        self.trials.iter().any(Trial::succeeded)
    }

    /// Scores of the latest successful trial that reported any.
    pub fn latest_scores(&self) -> Option<&[f64]> {
        self.trials.iter().rev().filter(|t| t.succeeded()).find_map(|t| t.scores.as_deref())
    }

    /// One-based index of the first trial with `r >= target - tol`.
    pub fn trials_to_reach(&self, target: f64, tol: f64) -> Option<usize> {
        self.trials.iter().position(|t| t.r >= target - tol).map(|i| i + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tpe,
    Random,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "tpe" => Ok(Self::Tpe),
            "random" => Ok(Self::Random),
            other => Err(format!("unknown search method {other:?} (expected tpe or random)")),
        }
    }
}

/// Settings shared by both proposers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSettings {
    pub method: Method,
    pub trials: usize,
    pub seed: u64,
    pub tpe: TpeParams,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self { method: Method::Tpe, trials: 30, seed: 0, tpe: TpeParams::default() }
    }
}

/// Stateful proposer: during start-up the tree-structured estimator hands
/// out a batch of congestion-seeded configurations.
pub struct Proposer<'a> {
    space: &'a SearchSpace,
    settings: &'a SearchSettings,
    initial_scores: Vec<f64>,
    queue: Vec<BessConfig>,
}

impl<'a> Proposer<'a> {
    pub fn new(space: &'a SearchSpace, settings: &'a SearchSettings, initial_scores: Option<Vec<f64>>) -> Self {
        let initial_scores = initial_scores.unwrap_or_else(|| vec![0.0; space.catalog.len()]);
        Self { space, settings, initial_scores, queue: Vec::new() }
    }

    pub fn propose<R: Rng + ?Sized>(&mut self, history: &SearchHistory, rng: &mut R) -> Result<BessConfig, PlannerError> {
        match self.settings.method {
            Method::Random => Ok(self.space.random_config(rng)),
            Method::Tpe if history.len() < self.settings.tpe.n_startup => {
                if self.queue.is_empty() {
                    let scores = history.latest_scores().unwrap_or(&self.initial_scores).to_vec();
                    let want = (self.settings.tpe.n_startup - history.len()).min(self.space.feasible_sites().len());
                    self.queue = congestion_seed(self.space, &scores, want, rng)?;
                    self.queue.reverse();
                }
                Ok(self.queue.pop().expect("seeded at least one"))
            }
            Method::Tpe => {
                let scores = history.latest_scores().unwrap_or(&self.initial_scores).to_vec();
                tpe_suggest(history, self.space, &self.settings.tpe, &scores, rng)
            }
        }
    }
}

/// Sequential search: propose, evaluate, record. Only the proposer differs
/// between methods.
pub fn run_search(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    settings: &SearchSettings,
    initial_scores: Option<Vec<f64>>,
) -> Result<SearchHistory, PlannerError> {
    if settings.trials == 0 {
        return Err(PlannerError::Space("trial budget must be at least 1".into()));
    }
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut proposer = Proposer::new(space, settings, initial_scores);
    let mut history = SearchHistory::new();
    for index in 0..settings.trials {
        let config = proposer.propose(&history, &mut rng)?;
        let start = Instant::now();
        let eval = evaluator.evaluate(&config);
        let wall_time = start.elapsed().as_secs_f64();
        info!("trial {index}: R = {:.4} ({} sites)", eval.r, config.sites.len());
        history.push(Trial {
            index,
            config,
            r: eval.r,
            scores: eval.scores,
            failure: eval.failure,
            wall_time,
        });
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::space::tests::catalog;
    use crate::planner::CapacitySpace;
    use crate::scheduling::Site;

    struct Linear;
    impl Evaluator for Linear {
        fn evaluate(&self, c: &BessConfig) -> Evaluation {
            let r = c.sites.iter().map(|s| s.capacity * (s.candidate_id as f64 + 1.0)).sum();
            Evaluation { r, scores: None, failure: None }
        }
    }

    fn trial(index: usize, r: f64) -> Trial {
        Trial {
            index,
            config: BessConfig { sites: vec![Site { candidate_id: 0, capacity: 1.0 }], budget: 1.0 },
            r,
            scores: None,
            failure: if r.is_finite() { None } else { Some("x".into()) },
            wall_time: 0.0,
        }
    }

    #[test]
    fn best_tracks_argmax() {
        let h = SearchHistory::from_trials(vec![
            trial(0, f64::NEG_INFINITY),
            trial(1, 3.0),
            trial(2, 5.0),
            trial(3, 5.0),
            trial(4, 1.0),
        ]);
        assert_eq!(h.best, Some(2));
        assert_eq!(h.trials_to_reach(5.0, 1e-9), Some(3));
        let none = SearchHistory::from_trials(vec![trial(0, f64::NEG_INFINITY)]);
        assert_eq!(none.best, None);
        assert!(!none.any_success());
    }

    #[test]
    fn budget_one_and_reproducible() {
        let space = SearchSpace::new(catalog(4), 2, CapacitySpace::Range { min: 1.0, max: 30.0 }, 1e3).unwrap();
        for method in [Method::Tpe, Method::Random] {
            let mut s = SearchSettings { method, trials: 1, seed: 5, ..Default::default() };
            assert_eq!(run_search(&space, &Linear, &s, None).unwrap().len(), 1);
            s.trials = 25;
            let a = run_search(&space, &Linear, &s, None).unwrap();
            let b = run_search(&space, &Linear, &s, None).unwrap();
            assert_eq!(a, b);
            assert!(a.trials.iter().all(|t| space.investment(&t.config) <= space.budget));
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("TPE".parse::<Method>().unwrap(), Method::Tpe);
        assert!("grid".parse::<Method>().is_err());
    }
}
