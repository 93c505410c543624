//! Tree-structured Parzen estimator over (site set, capacities).
//!
//! Past trials are split at quantile `gamma` of the return into a good and
//! a bad set. Each set gets a factorised density: a categorical over the
//! number of sites, a categorical over site inclusion, and per site either a
//! categorical over grid levels or a truncated Gaussian kernel density with
//! a uniform prior component. Candidates are drawn from the good density
//! and ranked by `log l(x) - log g(x)`.

use super::seed::{congestion_seed, weighted_pick};
use super::{CapacitySpace, PlannerError, SearchHistory, SearchSpace};
use crate::scheduling::BessConfig;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TpeParams {
    pub gamma: f64,
    pub n_startup: usize,
    pub n_ei: usize,
    /// Pseudo-count added to every categorical cell and weight of the
    /// uniform component in capacity densities.
    pub prior_weight: f64,
}

impl Default for TpeParams {
    fn default() -> Self {
        Self { gamma: 0.15, n_startup: 10, n_ei: 24, prior_weight: 1.0 }
    }
}

struct Density<'a> {
    space: &'a SearchSpace,
    prior: f64,
    /// Index `k - 1` for `k` sites.
    count_weights: Vec<f64>,
    site_weights: Vec<f64>,
    /// Per catalog entry: observed capacities.
    capacities: Vec<Vec<f64>>,
}

impl<'a> Density<'a> {
    fn fit(space: &'a SearchSpace, configs: &[&BessConfig], prior: f64) -> Self {
        let feasible = space.feasible_sites();
        let n = space.catalog.len();
        let max_k = space.max_sites.min(feasible.len());
        let mut count_weights = vec![prior; max_k];
        let mut site_weights = vec![0.0; n];
        for &i in &feasible {
            site_weights[i] = prior;
        }
        let mut capacities = vec![Vec::new(); n];
        for cfg in configs {
            let k = cfg.sites.len();
            if (1..=max_k).contains(&k) {
                count_weights[k - 1] += 1.0;
            }
            for s in &cfg.sites {
                if let Some(i) = space.index_of(s.candidate_id) {
                    if site_weights[i] > 0.0 {
                        site_weights[i] += 1.0;
                        capacities[i].push(s.capacity);
                    }
                }
            }
        }
        Self { space, prior, count_weights, site_weights, capacities }
    }

    fn bandwidth(&self, i: usize) -> f64 {
        let (lo, hi) = (self.space.min_capacity(), self.space.max_capacity(i));
        let n = self.capacities[i].len() as f64;
        (hi - lo) * 0.25 * (n + 1.0).powf(-0.2)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BessConfig {
        let k = 1 + weighted_pick(&self.count_weights, &vec![false; self.count_weights.len()], rng).expect("k >= 1");
        let mut taken: Vec<bool> = self.site_weights.iter().map(|w| *w <= 0.0).collect();
        let mut picks = Vec::with_capacity(k);
        while picks.len() < k {
            let Some(i) = weighted_pick(&self.site_weights, &taken, rng) else { break };
            taken[i] = true;
            picks.push((i, self.sample_capacity(i, rng)));
        }
        self.space.make_config(&picks)
    }

    fn sample_capacity<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        match &self.space.capacity {
            CapacitySpace::Grid { .. } => {
                let levels = self.space.levels_at(i);
                let w = self.level_weights(i, &levels);
                levels[weighted_pick(&w, &vec![false; w.len()], rng).expect("nonempty levels")]
            }
            CapacitySpace::Range { .. } => {
                let (lo, hi) = (self.space.min_capacity(), self.space.max_capacity(i));
                if hi <= lo {
                    return lo;
                }
                let obs = &self.capacities[i];
                let total = obs.len() as f64 + self.prior;
                let u = rng.random::<f64>() * total;
                if u >= obs.len() as f64 {
                    return rng.random_range(lo..=hi);
                }
                let mu = obs[u as usize].clamp(lo, hi);
                let normal = Normal::new(mu, self.bandwidth(i)).expect("positive bandwidth");
                for _ in 0..64 {
                    let x = normal.sample(rng);
                    if (lo..=hi).contains(&x) {
                        return x;
                    }
                }
                mu
            }
        }
    }

    fn level_weights(&self, i: usize, levels: &[f64]) -> Vec<f64> {
        let mut w = vec![self.prior; levels.len()];
        for &c in &self.capacities[i] {
            if let Some(j) = nearest(levels, c) {
                w[j] += 1.0;
            }
        }
        w
    }

    fn log_density(&self, cfg: &BessConfig) -> f64 {
        let k = cfg.sites.len();
        if k == 0 || k > self.count_weights.len() {
            return f64::NEG_INFINITY;
        }
        let mut lp = (self.count_weights[k - 1] / self.count_weights.iter().sum::<f64>()).ln();
        let site_total: f64 = self.site_weights.iter().sum();
        for s in &cfg.sites {
            let Some(i) = self.space.index_of(s.candidate_id) else { return f64::NEG_INFINITY };
            lp += (self.site_weights[i] / site_total).ln();
            lp += self.log_capacity_density(i, s.capacity);
        }
        lp
    }

    fn log_capacity_density(&self, i: usize, c: f64) -> f64 {
        match &self.space.capacity {
            CapacitySpace::Grid { .. } => {
                let levels = self.space.levels_at(i);
                let w = self.level_weights(i, &levels);
                match nearest(&levels, c) {
                    Some(j) => (w[j] / w.iter().sum::<f64>()).ln(),
                    None => f64::NEG_INFINITY,
                }
            }
            CapacitySpace::Range { .. } => {
                let (lo, hi) = (self.space.min_capacity(), self.space.max_capacity(i));
                if hi <= lo {
                    return 0.0;
                }
                let obs = &self.capacities[i];
                let sigma = self.bandwidth(i);
                let kernel: f64 = obs.iter().map(|&mu| truncated_normal_pdf(c, mu.clamp(lo, hi), sigma, lo, hi)).sum();
                ((kernel + self.prior / (hi - lo)) / (obs.len() as f64 + self.prior)).ln()
            }
        }
    }
}

fn nearest(levels: &[f64], c: f64) -> Option<usize> {
    levels
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - c).abs().total_cmp(&(b.1 - c).abs()))
        .map(|(j, _)| j)
}

fn truncated_normal_pdf(x: f64, mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let cdf = |v: f64| 0.5 * (1.0 + libm::erf((v - mu) / (sigma * std::f64::consts::SQRT_2)));
    let mass = (cdf(hi) - cdf(lo)).max(1e-300);
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()) / mass
}

/// Next configuration to evaluate. Below `n_startup` trials it falls back
/// to the congestion-seeded sampler with `scores`.
pub fn tpe_suggest<R: Rng + ?Sized>(
    history: &SearchHistory,
    space: &SearchSpace,
    params: &TpeParams,
    scores: &[f64],
    rng: &mut R,
) -> Result<BessConfig, PlannerError> {
    space.validate()?;
    if history.len() < params.n_startup.max(1) {
        return Ok(congestion_seed(space, scores, 1, rng)?.remove(0));
    }
    let mut order: Vec<usize> = (0..history.len()).collect();
    order.sort_by(|&a, &b| history.trials[b].r.total_cmp(&history.trials[a].r).then(a.cmp(&b)));
    let n_good = ((params.gamma * history.len() as f64).ceil() as usize).clamp(1, history.len());
    let good: Vec<&BessConfig> = order[..n_good].iter().map(|&i| &history.trials[i].config).collect();
    let bad: Vec<&BessConfig> = order[n_good..].iter().map(|&i| &history.trials[i].config).collect();
    let l = Density::fit(space, &good, params.prior_weight);
    let g = Density::fit(space, &bad, params.prior_weight);

    let mut best: Option<(f64, BessConfig)> = None;
    for _ in 0..params.n_ei.max(1) {
        let cand = l.sample(rng);
        let score = l.log_density(&cand) - g.log_density(&cand);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, cand));
        }
    }
    Ok(best.expect("n_ei >= 1").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::space::tests::catalog;
    use crate::planner::Trial;
    use crate::scheduling::Site;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn history_favoring(site: u32, n: usize, space: &SearchSpace) -> SearchHistory {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trials = (0..n)
            .map(|i| {
                let mut config = space.random_config(&mut rng);
                let has = config.sites.iter().any(|s| s.candidate_id == site);
                if i % 5 == 0 && !has {
                    config.sites[0].candidate_id = site;
                    if config.sites.iter().filter(|s| s.candidate_id == site).count() > 1 {
                        config.sites.truncate(1);
                    }
                }
                let r = if config.sites.iter().any(|s| s.candidate_id == site) { 100.0 } else { 1.0 } + i as f64 * 1e-3;
                Trial { index: i, config, r, scores: None, failure: None, wall_time: 0.0 }
            })
            .collect();
        SearchHistory::from_trials(trials)
    }

    #[test]
    fn favours_sites_of_good_trials() {
        let space = SearchSpace::new(catalog(10), 2, CapacitySpace::Range { min: 1.0, max: 50.0 }, 1e5).unwrap();
        let h = history_favoring(7, 40, &space);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 1000;
        let hits = (0..n)
            .filter(|_| {
                let c = tpe_suggest(&h, &space, &TpeParams::default(), &[1.0; 10], &mut rng).unwrap();
                c.sites.iter().any(|s| s.candidate_id == 7)
            })
            .count();
        // Uniform inclusion with up to two of ten sites is at most 0.2.
        assert!(hits as f64 / n as f64 > 0.2, "{hits}");
    }

    #[test]
    fn startup_uses_seed_sampler() {
        let space = SearchSpace::new(catalog(5), 1, CapacitySpace::Range { min: 1.0, max: 50.0 }, 1e5).unwrap();
        let h = history_favoring(2, 1, &space);
        let scores = [0.0, 0.0, 0.0, 9.0, 0.0];
        let c = tpe_suggest(&h, &space, &TpeParams::default(), &scores, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(c.sites[0].candidate_id, 3);
    }

    #[test]
    fn singleton_space() {
        let space = SearchSpace::new(catalog(1), 1, CapacitySpace::Grid { levels: vec![20.0] }, 1e5).unwrap();
        let h = history_favoring(0, 15, &space);
        let c = tpe_suggest(&h, &space, &TpeParams::default(), &[1.0], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(c.sites, vec![Site { candidate_id: 0, capacity: 20.0 }]);
    }

    #[test]
    fn truncated_pdf_integrates_to_one() {
        let (lo, hi, n) = (2.0, 7.0, 20_000);
        let h = (hi - lo) / n as f64;
        let total: f64 = (0..n).map(|k| truncated_normal_pdf(lo + (k as f64 + 0.5) * h, 6.5, 1.3, lo, hi) * h).sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }
}
