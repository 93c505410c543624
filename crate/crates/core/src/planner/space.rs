use super::PlannerError;
use crate::scheduling::{BessCandidate, BessConfig, Site};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Allowed capacities at any site, MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CapacitySpace {
    /// Sorted ascending, all positive.
    Grid { levels: Vec<f64> },
    Range { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub catalog: Vec<BessCandidate>,
    pub max_sites: usize,
    pub capacity: CapacitySpace,
    pub budget: f64,
}

impl SearchSpace {
    pub fn new(
        catalog: Vec<BessCandidate>,
        max_sites: usize,
        mut capacity: CapacitySpace,
        budget: f64,
    ) -> Result<Self, PlannerError> {
        if let CapacitySpace::Grid { levels } = &mut capacity {
            levels.sort_by(f64::total_cmp);
            levels.dedup();
        }
        let space = Self { catalog, max_sites, capacity, budget };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        let bad = |m: &str| Err(PlannerError::Space(m.into()));
        if self.catalog.is_empty() {
            return bad("empty candidate catalog");
        }
        if self.max_sites == 0 || self.max_sites > self.catalog.len() {
            return bad("max_sites must lie in 1..=catalog size");
        }
        if !(self.budget >= 0.0) || !self.budget.is_finite() {
            return bad("budget must be finite and nonnegative");
        }
        for c in &self.catalog {
            c.validate().map_err(PlannerError::Space)?;
        }
        match &self.capacity {
            CapacitySpace::Grid { levels } => {
                if levels.is_empty() || levels.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
                    return bad("capacity grid needs positive finite levels");
                }
                if levels.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("capacity grid must be strictly increasing");
                }
            }
            CapacitySpace::Range { min, max } => {
                if !(*min > 0.0 && min <= max) || !max.is_finite() {
                    return bad("capacity range needs 0 < min <= max < inf");
                }
            }
        }
        if self.feasible_sites().is_empty() {
            let lo = self.min_capacity();
            let cheapest = self.catalog.iter().map(|c| c.fixed_cost + c.unit_cost * lo).fold(f64::INFINITY, f64::min);
            return Err(PlannerError::Unaffordable { cheapest, budget: self.budget });
        }
        Ok(())
    }

    pub fn min_capacity(&self) -> f64 {
        match &self.capacity {
            CapacitySpace::Grid { levels } => levels[0],
            CapacitySpace::Range { min, .. } => *min,
        }
    }

    /// Largest capacity allowed at catalog entry `i`, given the whole budget.
    pub fn max_capacity(&self, i: usize) -> f64 {
        let cap = self.catalog[i].capacity_cap(self.budget, false);
        match &self.capacity {
            CapacitySpace::Grid { levels } => {
                levels.iter().copied().rfind(|l| *l <= cap).unwrap_or(0.0)
            }
            CapacitySpace::Range { max, .. } => max.min(cap),
        }
    }

    /// Grid levels admissible at entry `i`; empty for a range space.
    pub fn levels_at(&self, i: usize) -> Vec<f64> {
        match &self.capacity {
            CapacitySpace::Grid { levels } => {
                let cap = self.max_capacity(i);
                levels.iter().copied().filter(|l| *l <= cap).collect()
            }
            CapacitySpace::Range { .. } => Vec::new(),
        }
    }

    /// Catalog indices affordable at the smallest capacity.
    pub fn feasible_sites(&self) -> Vec<usize> {
        let lo = self.min_capacity();
        (0..self.catalog.len())
            .filter(|&i| {
                let c = &self.catalog[i];
                c.fixed_cost + c.unit_cost * lo <= self.budget
            })
            .collect()
    }

    pub fn index_of(&self, candidate_id: u32) -> Option<usize> {
        self.catalog.iter().position(|c| c.id == candidate_id)
    }

    /// Uniform capacity draw at entry `i`.
    pub fn sample_capacity<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        match &self.capacity {
            CapacitySpace::Grid { .. } => {
                let levels = self.levels_at(i);
                levels[rng.random_range(0..levels.len())]
            }
            CapacitySpace::Range { min, .. } => {
                let hi = self.max_capacity(i);
                if hi > *min {
                    rng.random_range(*min..=hi)
                } else {
                    *min
                }
            }
        }
    }

    /// Builds a config from `(catalog index, capacity)` pairs and repairs it
    /// to fit the budget.
    pub fn make_config(&self, picks: &[(usize, f64)]) -> BessConfig {
        let mut cfg = BessConfig {
            sites: picks
                .iter()
                .map(|&(i, c)| Site { candidate_id: self.catalog[i].id, capacity: c })
                .collect(),
            budget: self.budget,
        };
        self.repair(&mut cfg);
        cfg
    }

    /// Shrinks capacities, then drops trailing sites, until the investment
    /// fits the budget. Never leaves an empty config if the first site is
    /// affordable on its own.
    pub fn repair(&self, cfg: &mut BessConfig) {
        let lo = self.min_capacity();
        loop {
            let invest = self.investment(cfg);
            if invest <= self.budget {
                return;
            }
            let idx: Vec<usize> = cfg.sites.iter().map(|s| self.index_of(s.candidate_id).expect("own catalog")).collect();
            let floor: f64 = idx.iter().map(|&i| self.catalog[i].fixed_cost + self.catalog[i].unit_cost * lo).sum();
            if floor > self.budget {
                cfg.sites.pop();
                continue;
            }
            match &self.capacity {
                CapacitySpace::Range { .. } => {
                    let excess: f64 = idx
                        .iter()
                        .zip(&cfg.sites)
                        .map(|(&i, s)| self.catalog[i].unit_cost * (s.capacity - lo))
                        .sum();
                    let s = ((self.budget - floor) / excess * (1.0 - 1e-12)).clamp(0.0, 1.0);
                    for site in &mut cfg.sites {
                        site.capacity = lo + s * (site.capacity - lo);
                    }
                }
                CapacitySpace::Grid { levels } => {
                    // Step the most expensive shrinkable site down one level.
                    let k = idx
                        .iter()
                        .zip(&cfg.sites)
                        .enumerate()
                        .filter(|(_, (_, s))| s.capacity > lo)
                        .max_by(|a, b| {
                            let ca = self.catalog[*a.1 .0].unit_cost * a.1 .1.capacity;
                            let cb = self.catalog[*b.1 .0].unit_cost * b.1 .1.capacity;
                            ca.total_cmp(&cb)
                        })
                        .map(|(k, _)| k);
                    match k {
                        Some(k) => {
                            let c = cfg.sites[k].capacity;
                            cfg.sites[k].capacity =
                                levels.iter().copied().rfind(|l| *l < c).unwrap_or(lo);
                        }
                        None => {
                            cfg.sites.pop();
                        }
                    }
                }
            }
        }
    }

    pub fn investment(&self, cfg: &BessConfig) -> f64 {
        cfg.investment(&self.catalog).expect("config built from this catalog")
    }

    /// Uniform proposal: site count, sites and capacities all uniform.
    pub fn random_config<R: Rng + ?Sized>(&self, rng: &mut R) -> BessConfig {
        let feasible = self.feasible_sites();
        let k = rng.random_range(1..=self.max_sites.min(feasible.len()));
        let picks: Vec<(usize, f64)> = index::sample(rng, feasible.len(), k)
            .into_iter()
            .map(|j| {
                let i = feasible[j];
                (i, self.sample_capacity(i, rng))
            })
            .collect();
        self.make_config(&picks)
    }
}
