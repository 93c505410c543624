use super::search::{Evaluation, Evaluator};
use super::{CapacitySpace, PlannerError, SearchSpace};
use crate::scheduling::BessConfig;

/// Closed-form return surface for exercising the search without solvers.
///
/// Each site contributes `value_i * (1 - ((c - best_i) / width)^2)`; sites
/// absent from the catalog contribute nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLandscape {
    pub catalog_ids: Vec<u32>,
    pub value: Vec<f64>,
    pub best_capacity: Vec<f64>,
    pub width: f64,
}

impl SyntheticLandscape {
    /// Stand-in congestion scores: the nonnegative part of each value.
    pub fn scores(&self) -> Vec<f64> {
        self.value.iter().map(|v| v.max(0.0)).collect()
    }

    pub fn value_of(&self, config: &BessConfig) -> f64 {
        config
            .installed()
            .filter_map(|s| {
                let i = self.catalog_ids.iter().position(|&id| id == s.candidate_id)?;
                let z = (s.capacity - self.best_capacity[i]) / self.width;
                Some(self.value[i] * (1.0 - z * z))
            })
            .sum()
    }

    /// Best return over a grid space by enumeration of every site subset
    /// up to `max_sites` and every level combination within budget.
    pub fn optimum(&self, space: &SearchSpace) -> Result<f64, PlannerError> {
        let CapacitySpace::Grid { .. } = space.capacity else {
            return Err(PlannerError::Space("optimum needs a capacity grid".into()));
        };
        let feasible = space.feasible_sites();
        let mut best = f64::NEG_INFINITY;
        let mut stack: Vec<(usize, Vec<(usize, f64)>)> = vec![(0, Vec::new())];
        while let Some((next, picks)) = stack.pop() {
            if !picks.is_empty() {
                let cfg = BessConfig {
                    sites: picks
                        .iter()
                        .map(|&(i, c)| crate::scheduling::Site { candidate_id: space.catalog[i].id, capacity: c })
                        .collect(),
                    budget: space.budget,
                };
                if space.investment(&cfg) <= space.budget {
                    best = best.max(self.value_of(&cfg));
                } else {
                    continue;
                }
            }
            if picks.len() == space.max_sites {
                continue;
            }
            for j in next..feasible.len() {
                let i = feasible[j];
                for c in space.levels_at(i) {
                    let mut p = picks.clone();
                    p.push((i, c));
                    stack.push((j + 1, p));
                }
            }
        }
        Ok(best)
    }
}

impl Evaluator for SyntheticLandscape {
    fn evaluate(&self, config: &BessConfig) -> Evaluation {
        Evaluation { r: self.value_of(config), scores: Some(self.scores()), failure: None }
    }
}
