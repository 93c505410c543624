//! Siting and sizing search: congestion-seeded start-up, a tree-structured
//! Parzen estimator or uniform random proposals, and per-trial market
//! simulation with discounted returns.

mod evaluate;
mod history;
mod search;
mod seed;
pub(crate) mod space;
mod synthetic;
mod tpe;

pub use evaluate::{ImpactComparison, MarketEvaluator};
pub use history::{read_history_jsonl, write_history_jsonl, write_summary_csv, write_timings_csv};
pub use search::{run_search, Evaluation, Evaluator, Method, Proposer, SearchHistory, SearchSettings, Trial};
pub use seed::congestion_seed;
pub use space::{CapacitySpace, SearchSpace};
pub use synthetic::SyntheticLandscape;
pub use tpe::{tpe_suggest, TpeParams};

use crate::dispatch::DispatchError;
use crate::market::MarketError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("invalid search space: {0}")]
    Space(String),
    /// Every configuration would exceed the budget.
    #[error("cheapest installation costs {cheapest}, above the budget {budget}")]
    Unaffordable { cheapest: f64, budget: f64 },
    #[error("invalid horizon: {0}")]
    Horizon(String),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("history file: {0}")]
    Io(#[from] std::io::Error),
}

/// Simulated horizon and discounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HorizonSpec {
    /// Calendar length in years; `None` simulates each day of the load
    /// profile once. Longer horizons repeat the profile's days in order.
    pub years: Option<f64>,
    /// Periods per simulation day.
    pub day_length: usize,
    /// Annual discount rate.
    pub discount_rate: f64,
    /// Share of days simulated, highest congestion first; the rest take
    /// the mean cashflow of the simulated days.
    pub peak_fraction: f64,
    pub days_per_year: f64,
}

impl Default for HorizonSpec {
    fn default() -> Self {
        Self { years: None, day_length: 24, discount_rate: 0.05, peak_fraction: 1.0, days_per_year: 365.0 }
    }
}

impl HorizonSpec {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let bad = |m: &str| Err(PlannerError::Horizon(m.into()));
        if self.day_length == 0 {
            return bad("day_length must be positive");
        }
        if !(self.discount_rate >= 0.0) || !self.discount_rate.is_finite() {
            return bad("discount_rate must be finite and nonnegative");
        }
        if !(self.peak_fraction > 0.0 && self.peak_fraction <= 1.0) {
            return bad("peak_fraction must lie in (0, 1]");
        }
        if !(self.days_per_year > 0.0) {
            return bad("days_per_year must be positive");
        }
        if let Some(y) = self.years {
            if !(y > 0.0) || !y.is_finite() {
                return bad("years must be positive");
            }
        }
        Ok(())
    }

    /// Number of whole days in a profile of `periods` periods.
    pub fn base_days(&self, periods: usize) -> usize {
        periods / self.day_length
    }

    /// Base-day index of every simulated calendar day.
    pub fn calendar(&self, base_days: usize) -> Vec<usize> {
        match self.years {
            None => (0..base_days).collect(),
            Some(y) => {
                let n = (y * self.days_per_year).round().max(1.0) as usize;
                (0..n).map(|d| d % base_days.max(1)).collect()
            }
        }
    }
}

/// `sum_d cf_d / (1 + rate)^(d / days_per_year)`, day 0 undiscounted.
pub fn npv(cashflows: &[f64], rate: f64, days_per_year: f64) -> f64 {
    cashflows
        .iter()
        .enumerate()
        .map(|(d, cf)| cf / (1.0 + rate).powf(d as f64 / days_per_year))
        .sum()
}

/// The `ceil(fraction * D)` highest-scoring days, ties to the earlier day,
/// returned in day order.
pub fn select_peak_days(day_scores: &[f64], fraction: f64) -> Vec<usize> {
    let n = ((fraction * day_scores.len() as f64).ceil() as usize).min(day_scores.len());
    let mut order: Vec<usize> = (0..day_scores.len()).collect();
    order.sort_by(|&a, &b| day_scores[b].total_cmp(&day_scores[a]).then(a.cmp(&b)));
    let mut picked = order[..n].to_vec();
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn npv_cases() {
        assert_eq!(npv(&[], 0.05, 365.0), 0.0);
        assert_eq!(npv(&[1.0, 2.0, 3.0], 0.0, 365.0), 6.0);
        let mut cf = vec![0.0; 366];
        cf[365] = 110.0;
        assert!((npv(&cf, 0.10, 365.0) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn peak_days() {
        assert_eq!(select_peak_days(&[1.0, 2.0, 3.0], 1.0), vec![0, 1, 2]);
        let s = [5.0, 1.0, 9.0, 2.0, 2.0, 0.0, 7.0, 3.0];
        assert_eq!(select_peak_days(&s, 0.25), vec![2, 6]);
        assert_eq!(select_peak_days(&[1.0, 1.0, 1.0, 1.0], 0.5), vec![0, 1]);
    }

    #[test]
    fn calendar_repeats_base_days() {
        let h = HorizonSpec { years: Some(5.0 / 365.0), ..Default::default() };
        assert_eq!(h.calendar(2), vec![0, 1, 0, 1, 0]);
        assert_eq!(HorizonSpec::default().calendar(3), vec![0, 1, 2]);
    }

    #[test]
    fn horizon_validation() {
        assert!(HorizonSpec { peak_fraction: 0.0, ..Default::default() }.validate().is_err());
        assert!(HorizonSpec { discount_rate: -0.1, ..Default::default() }.validate().is_err());
        assert!(HorizonSpec::default().validate().is_ok());
    }
}
