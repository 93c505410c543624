use super::{ScheduleError, ScheduleSolution};
use crate::dispatch::{BatteryBid, BidSet};
use crate::network::BusId;

pub const DEFAULT_MARGIN: f64 = 0.05;

/// Maps a schedule and the prices it was computed against to dispatch
/// offers. Implementations must be deterministic and emit
/// `charge_price <= 0 <= discharge_price`.
pub trait BidStrategy {
    fn bids(&self, schedule: &ScheduleSolution, buses: &[BusId], prices: &[Vec<f64>]) -> Result<BidSet, ScheduleError>;
}

/// Offers the scheduled quantities at a relative margin `delta` inside the
/// observed price: discharge at `lambda (1 - delta)`, charge paying up to
/// `lambda (1 + delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginStrategy {
    pub delta: f64,
}

impl Default for MarginStrategy {
    fn default() -> Self {
        Self { delta: DEFAULT_MARGIN }
    }
}

impl BidStrategy for MarginStrategy {
    fn bids(&self, schedule: &ScheduleSolution, buses: &[BusId], prices: &[Vec<f64>]) -> Result<BidSet, ScheduleError> {
        let delta = self.delta;
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(ScheduleError::Input(format!("bid margin must be finite and nonnegative, got {delta}")));
        }
        let n = schedule.candidate_ids.len();
        if buses.len() != n || prices.len() != n {
            return Err(ScheduleError::Input("one bus and one price series per scheduled battery".into()));
        }
        let nt = schedule.num_periods();
        let mut bids = Vec::new();
        for i in 0..n {
            if !schedule.installed[i] || schedule.capacities[i] <= 0.0 {
                continue;
            }
            if prices[i].len() != nt {
                return Err(ScheduleError::Input("prices do not cover the schedule horizon".into()));
            }
            let lam = &prices[i];
            bids.push(BatteryBid {
                battery_id: schedule.candidate_ids[i],
                bus: buses[i],
                charge_price: lam.iter().map(|l| (-l * (1.0 + delta)).min(0.0)).collect(),
                discharge_price: lam.iter().map(|l| (l * (1.0 - delta)).max(0.0)).collect(),
                charge_lower: vec![0.0; nt],
                charge_upper: schedule.charge[i].clone(),
                discharge_lower: vec![0.0; nt],
                discharge_upper: schedule.discharge[i].clone(),
            });
        }
        Ok(BidSet { bids })
    }
}

/// Default strategy with margin `delta`.
pub fn make_bids(
    schedule: &ScheduleSolution,
    buses: &[BusId],
    prices: &[Vec<f64>],
    delta: f64,
) -> Result<BidSet, ScheduleError> {
    MarginStrategy { delta }.bids(schedule, buses, prices)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule(pc: f64, pd: f64) -> ScheduleSolution {
        ScheduleSolution {
            candidate_ids: vec![1],
            capacities: vec![10.0],
            installed: vec![true],
            charge: vec![vec![pc]],
            discharge: vec![vec![pd]],
            soc: vec![vec![0.0, 0.0]],
            objective: 0.0,
            investment: 0.0,
            cashflow: vec![vec![0.0]],
            period_hours: 1.0,
            node_limit_reached: false,
        }
    }

    #[test]
    fn margin_arithmetic() {
        let b = make_bids(&schedule(0.0, 10.0), &[4], &[vec![40.0]], 0.05).unwrap();
        let bid = &b.bids[0];
        assert!((bid.discharge_price[0] - 38.0).abs() < 1e-12);
        assert!((bid.charge_price[0] + 42.0).abs() < 1e-12);
        assert_eq!(bid.discharge_upper, vec![10.0]);
        assert_eq!(bid.charge_upper, vec![0.0]);
        assert_eq!(bid.bus, 4);
    }

    #[test]
    fn zero_margin_sits_on_price() {
        let b = make_bids(&schedule(1.0, 0.0), &[4], &[vec![40.0]], 0.0).unwrap();
        assert_eq!(b.bids[0].discharge_price, vec![40.0]);
        assert_eq!(b.bids[0].charge_price, vec![-40.0]);
    }

    #[test]
    fn idle_schedule_has_zero_bounds() {
        let b = make_bids(&schedule(0.0, 0.0), &[4], &[vec![40.0]], 0.05).unwrap();
        assert!(b.bids[0].charge_upper.iter().chain(&b.bids[0].discharge_upper).all(|v| *v == 0.0));
    }

    #[test]
    fn negative_prices_keep_signs() {
        let b = make_bids(&schedule(1.0, 1.0), &[4], &[vec![-5.0]], 0.05).unwrap();
        assert!(b.bids[0].charge_price[0] <= 0.0 && b.bids[0].discharge_price[0] >= 0.0);
    }

    #[test]
    fn negative_margin_rejected() {
        assert!(make_bids(&schedule(0.0, 0.0), &[4], &[vec![40.0]], -0.1).is_err());
    }
}
