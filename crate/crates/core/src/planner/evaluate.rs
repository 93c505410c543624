use super::search::{Evaluation, Evaluator};
use super::{npv, select_peak_days, HorizonSpec, PlannerError};
use crate::dispatch::{
    build_dispatch, congestion_score, extract_lmps, solve_dispatch_with, BidSet, DispatchSolution, LmpVector,
};
use crate::market::{run_aus, AusParams, MarketCase};
use crate::network::{LoadProfile, PowerNetwork, PtdfMatrix};
use crate::scheduling::{build_fixed_schedule, prices_at, solve_schedule, BessCandidate, BessConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Returns of one configuration with and without price feedback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactComparison {
    pub r_with_impact: f64,
    pub r_fixed_price: f64,
    pub investment: f64,
}

/// Scores configurations by simulating the market day by day.
///
/// The storage-free dispatch of every base day is solved once up front; it
/// ranks days for subsampling, supplies the no-feedback prices, and gives
/// the initial congestion scores.
pub struct MarketEvaluator {
    pub net: PowerNetwork,
    pub ptdf: PtdfMatrix,
    pub loads: LoadProfile,
    pub catalog: Vec<BessCandidate>,
    pub horizon: HorizonSpec,
    pub params: AusParams,
    base: Vec<DispatchSolution>,
    base_lmps: Vec<LmpVector>,
    day_scores: Vec<f64>,
    selected: Vec<usize>,
    pool: rayon::ThreadPool,
}

impl MarketEvaluator {
    /// `threads == 0` uses every available core.
    pub fn new(
        net: PowerNetwork,
        ptdf: PtdfMatrix,
        loads: LoadProfile,
        catalog: Vec<BessCandidate>,
        horizon: HorizonSpec,
        params: AusParams,
        threads: usize,
    ) -> Result<Self, PlannerError> {
        horizon.validate()?;
        let days = horizon.base_days(loads.horizon());
        if days == 0 {
            return Err(PlannerError::Horizon(format!(
                "load profile has {} periods, fewer than one {}-period day",
                loads.horizon(),
                horizon.day_length
            )));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| PlannerError::Horizon(format!("thread pool: {e}")))?;
        let mut ev = Self {
            net,
            ptdf,
            loads,
            catalog,
            horizon,
            params,
            base: Vec::new(),
            base_lmps: Vec::new(),
            day_scores: Vec::new(),
            selected: Vec::new(),
            pool,
        };
        let base: Vec<DispatchSolution> = ev.pool.install(|| {
            (0..days)
                .into_par_iter()
                .map(|d| {
                    let dlp = build_dispatch(&ev.net, &ev.ptdf, &ev.loads, &BidSet::empty(), ev.day(d))?;
                    solve_dispatch_with(&dlp, &ev.params.tolerances)
                })
                .collect::<Result<_, _>>()
        })?;
        ev.base_lmps = base.iter().map(|s| extract_lmps(s, &ev.ptdf)).collect();
        ev.day_scores = base
            .iter()
            .map(|s| congestion_score(&[s], &ev.ptdf).map(|c| c.total()))
            .collect::<Result<_, _>>()?;
        ev.selected = select_peak_days(&ev.day_scores, horizon.peak_fraction);
        ev.base = base;
        Ok(ev)
    }

    fn day(&self, d: usize) -> Range<usize> {
        d * self.horizon.day_length..(d + 1) * self.horizon.day_length
    }

    pub fn base_days(&self) -> usize {
        self.base.len()
    }

    /// Aggregate storage-free congestion score per base day.
    pub fn day_scores(&self) -> &[f64] {
        &self.day_scores
    }

    /// Base days actually simulated.
    pub fn selected_days(&self) -> &[usize] {
        &self.selected
    }

    /// Storage-free congestion score per catalog entry.
    pub fn initial_scores(&self) -> Result<Vec<f64>, PlannerError> {
        let sols: Vec<&DispatchSolution> = self.base.iter().collect();
        Ok(self.catalog_scores(&congestion_score(&sols, &self.ptdf)?.scores))
    }

    fn catalog_scores(&self, bus_scores: &[f64]) -> Vec<f64> {
        self.catalog
            .iter()
            .map(|c| self.net.bus_index(c.bus).map_or(0.0, |b| bus_scores[b]))
            .collect()
    }

    /// Discounted value of per-base-day revenues; unsimulated days take the
    /// mean of the simulated ones.
    fn discounted(&self, revenue: &[(usize, f64)]) -> f64 {
        let mean = revenue.iter().map(|(_, r)| r).sum::<f64>() / revenue.len() as f64;
        let mut by_day = vec![mean; self.base_days()];
        for &(d, r) in revenue {
            by_day[d] = r;
        }
        let flows: Vec<f64> = self.horizon.calendar(self.base_days()).into_iter().map(|d| by_day[d]).collect();
        npv(&flows, self.horizon.discount_rate, self.horizon.days_per_year)
    }

    /// `R = NPV(daily revenue) - investment`, with refreshed per-site
    /// congestion scores from the returned dispatches.
    pub fn evaluate_config(&self, config: &BessConfig) -> Result<(f64, Vec<f64>), PlannerError> {
        let investment = config.investment(&self.catalog).map_err(PlannerError::Space)?;
        let case = MarketCase { net: &self.net, ptdf: &self.ptdf, loads: &self.loads, catalog: &self.catalog };
        let outcomes = self.pool.install(|| {
            self.selected
                .par_iter()
                .map(|&d| run_aus(&case, config, self.day(d), &self.params).map(|o| (d, o)))
                .collect::<Result<Vec<_>, _>>()
        })?;
        let revenue: Vec<(usize, f64)> = outcomes.iter().map(|(d, o)| (*d, o.revenue())).collect();
        let sols: Vec<&DispatchSolution> = outcomes.iter().map(|(_, o)| &o.dispatch).collect();
        let scores = self.catalog_scores(&congestion_score(&sols, &self.ptdf)?.scores);
        Ok((self.discounted(&revenue) - investment, scores))
    }

    /// Return with full price feedback against return at the storage-free
    /// prices, where the battery schedules once and is paid those prices.
    pub fn compare_lmp_impact(&self, config: &BessConfig) -> Result<ImpactComparison, PlannerError> {
        let investment = config.investment(&self.catalog).map_err(PlannerError::Space)?;
        let (r_with_impact, _) = self.evaluate_config(config)?;
        let (cands, caps) = config.resolve(&self.catalog).map_err(PlannerError::Space)?;
        let cands: Vec<BessCandidate> = cands.into_iter().cloned().collect();
        let dt = self.loads.period_hours;
        let schedule_err = |source| crate::market::MarketError::Schedule { iteration: 0, source };
        let revenue = self.pool.install(|| {
            self.selected
                .par_iter()
                .map(|&d| {
                    let prices = prices_at(&self.base_lmps[d], &self.net, &cands).map_err(schedule_err)?;
                    let milp = build_fixed_schedule(&cands, &caps, &prices, dt, config.budget, self.params.variant)
                        .map_err(schedule_err)?;
                    let sol = solve_schedule(&milp).map_err(schedule_err)?;
                    Ok::<_, PlannerError>((d, sol.revenue()))
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        Ok(ImpactComparison { r_with_impact, r_fixed_price: self.discounted(&revenue) - investment, investment })
    }
}

impl Evaluator for MarketEvaluator {
    fn evaluate(&self, config: &BessConfig) -> Evaluation {
        match self.evaluate_config(config) {
            Ok((r, scores)) => Evaluation { r, scores: Some(scores), failure: None },
            Err(e) => Evaluation::failed(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{compute_ptdf, Bus, GeneratorSpec, LineSpec, LoadSeries};
    use crate::scheduling::Site;

    fn candidate(id: u32, bus: u32) -> BessCandidate {
        BessCandidate {
            id,
            bus,
            fixed_cost: 50.0,
            unit_cost: 2.0,
            kappa_c: 0.25,
            kappa_d: 0.25,
            soc_min: 0.0,
            soc_max: 1.0,
            eta_c: 1.0,
            eta_d: 1.0,
            init_soc: Some(0.0),
        }
    }

    fn evaluator(second_cost: f64, days: usize, horizon: HorizonSpec) -> MarketEvaluator {
        let net = PowerNetwork::new(
            vec![Bus { id: 1, name: "a".into() }, Bus { id: 2, name: "b".into() }],
            vec![LineSpec { id: 1, from_bus: 1, to_bus: 2, reactance: 0.1, flow_limit: 1000.0 }],
            vec![
                GeneratorSpec { id: 1, bus: 1, marginal_cost: 10.0, p_min: 0.0, p_max: 100.0 },
                GeneratorSpec { id: 2, bus: 1, marginal_cost: second_cost, p_min: 0.0, p_max: 500.0 },
            ],
            None,
        )
        .unwrap();
        let ptdf = compute_ptdf(&net).unwrap();
        let day: Vec<f64> = (0..24).map(|t| if t % 2 == 0 { 50.0 } else { 150.0 }).collect();
        let loads = LoadProfile::new(vec![LoadSeries { bus: 2, values: day.repeat(days) }]);
        MarketEvaluator::new(net, ptdf, loads, vec![candidate(1, 2)], horizon, AusParams::default(), 1).unwrap()
    }

    #[test]
    fn zero_capacity_returns_zero() {
        let ev = evaluator(30.0, 2, HorizonSpec::default());
        let cfg = BessConfig { sites: vec![Site { candidate_id: 1, capacity: 0.0 }], budget: 1e3 };
        assert_eq!(ev.evaluate_config(&cfg).unwrap().0, 0.0);
        let cmp = ev.compare_lmp_impact(&cfg).unwrap();
        assert_eq!((cmp.r_with_impact, cmp.r_fixed_price), (0.0, 0.0));
    }

    #[test]
    fn flat_prices_lose_the_investment() {
        let ev = evaluator(10.0, 2, HorizonSpec::default());
        let cfg = BessConfig { sites: vec![Site { candidate_id: 1, capacity: 4.0 }], budget: 1e3 };
        let (r, _) = ev.evaluate_config(&cfg).unwrap();
        assert!((r + 58.0).abs() < 1e-6, "{r}");
    }

    #[test]
    fn two_days_undiscounted() {
        // Identical days: two of them earn twice one day's revenue.
        let h = HorizonSpec { discount_rate: 0.0, ..Default::default() };
        let ev = evaluator(30.0, 2, h);
        let cfg = BessConfig { sites: vec![Site { candidate_id: 1, capacity: 4.0 }], budget: 1e3 };
        let (r, _) = ev.evaluate_config(&cfg).unwrap();
        let one_day = evaluator(30.0, 1, h).evaluate_config(&cfg).unwrap().0 + 58.0;
        assert!(one_day > 0.0);
        assert!((r - (2.0 * one_day - 58.0)).abs() < 1e-6, "{r} vs {one_day}");
    }

    #[test]
    fn subsampled_days_take_the_mean() {
        let h = HorizonSpec { discount_rate: 0.0, peak_fraction: 0.5, ..Default::default() };
        let ev = evaluator(30.0, 4, h);
        assert_eq!(ev.selected_days().len(), 2);
        let cfg = BessConfig { sites: vec![Site { candidate_id: 1, capacity: 4.0 }], budget: 1e3 };
        let full = evaluator(30.0, 4, HorizonSpec { discount_rate: 0.0, ..Default::default() });
        let a = ev.evaluate_config(&cfg).unwrap().0;
        let b = full.evaluate_config(&cfg).unwrap().0;
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn failures_become_sentinels() {
        let ev = evaluator(30.0, 1, HorizonSpec::default());
        let cfg = BessConfig { sites: vec![Site { candidate_id: 1, capacity: 400.0 }], budget: 10.0 };
        let e = ev.evaluate(&cfg);
        assert_eq!(e.r, f64::NEG_INFINITY);
        assert!(e.failure.is_some());
    }
}
