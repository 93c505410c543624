//! Alternating updates between the market operator and the storage owner.
//!
//! Iteration 0 dispatches without storage. Each later iteration schedules
//! the installed batteries against the previous prices, converts the
//! schedule to bids, re-dispatches, and compares the new prices with the
//! previous ones. `k` counts those comparisons, so a run with `k` trace
//! entries performed `k + 1` dispatch solves.

mod trace;

pub use trace::{read_trace_json, write_trace_json, TraceEntry};

use crate::dispatch::{
    build_dispatch, extract_lmps, solve_dispatch_with, BatteryBid, BidSet, DispatchError, DispatchSolution, LmpVector,
};
use crate::lp::Tolerances;
use crate::network::{LoadProfile, PowerNetwork, PtdfMatrix};
use crate::scheduling::{
    build_fixed_schedule, make_bids, prices_at, solve_schedule, BessCandidate, BessConfig, ScheduleError,
    ScheduleSolution, VariantSpec, DEFAULT_MARGIN,
};
use log::{debug, info};
use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dispatch failed at iteration {iteration}: {source}")]
    Dispatch {
        iteration: usize,
        #[source]
        source: DispatchError,
    },
    #[error("scheduling failed at iteration {iteration}: {source}")]
    Schedule {
        iteration: usize,
        #[source]
        source: ScheduleError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AusParams {
    /// Stop once the L2 price change drops below this, $/MWh.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Relative bid margin of the default strategy.
    pub margin: f64,
    pub variant: VariantSpec,
    pub tolerances: Tolerances,
}

impl Default for AusParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_iter: 10,
            margin: DEFAULT_MARGIN,
            variant: VariantSpec::default(),
            tolerances: Tolerances::default(),
        }
    }
}

/// Everything fixed across iterations of one run.
#[derive(Debug, Clone, Copy)]
pub struct MarketCase<'a> {
    pub net: &'a PowerNetwork,
    pub ptdf: &'a PtdfMatrix,
    pub loads: &'a LoadProfile,
    pub catalog: &'a [BessCandidate],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// Number of price comparisons made.
    pub iterations: usize,
    pub final_delta: f64,
    /// The price change failed to shrink twice in a row.
    pub oscillation: bool,
    /// Iteration whose dispatch and schedule are returned.
    pub returned_iteration: usize,
}

/// One dispatch-schedule round.
#[derive(Debug, Clone)]
pub struct AusStep {
    pub schedule: ScheduleSolution,
    pub bids: BidSet,
    pub dispatch: DispatchSolution,
    pub lmps: LmpVector,
}

#[derive(Debug, Clone)]
pub struct AusOutcome {
    pub dispatch: DispatchSolution,
    pub schedule: ScheduleSolution,
    pub bids: BidSet,
    pub lmps: LmpVector,
    /// Prices of the storage-free iteration 0.
    pub base_lmps: LmpVector,
    pub base_dispatch: DispatchSolution,
    pub report: ConvergenceReport,
    pub trace: Vec<TraceEntry>,
}

impl AusOutcome {
    /// Energy revenue of the returned schedule at its own prices.
    pub fn revenue(&self) -> f64 {
        self.schedule.revenue()
    }
}

/// L2 distance over all buses and periods.
pub fn price_delta(a: &LmpVector, b: &LmpVector) -> Result<f64, MarketError> {
    if a.values.len() != b.values.len() || a.values.iter().zip(&b.values).any(|(x, y)| x.len() != y.len()) {
        return Err(MarketError::Config("price vectors differ in shape".into()));
    }
    Ok(a.values
        .iter()
        .flatten()
        .zip(b.values.iter().flatten())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Battery cost `g = sum_t lambda_t dt (pc_t - pd_t)` of the cleared
/// quantities in `dispatch`.
pub fn battery_cost(dispatch: &DispatchSolution, lmps: &LmpVector, net: &PowerNetwork, bids: &BidSet, dt: f64) -> f64 {
    let mut g = 0.0;
    for (k, bid) in bids.bids.iter().enumerate() {
        let b = net.bus_index(bid.bus).expect("bids validated against network");
        for t in 0..dispatch.num_periods() {
            g += lmps.at(b, t) * dt * (dispatch.charge[k][t] - dispatch.discharge[k][t]);
        }
    }
    g
}

fn dispatch_with(
    case: &MarketCase<'_>,
    bids: &BidSet,
    periods: Range<usize>,
    tol: &Tolerances,
) -> Result<(DispatchSolution, LmpVector), DispatchError> {
    let dlp = build_dispatch(case.net, case.ptdf, case.loads, bids, periods)?;
    let sol = solve_dispatch_with(&dlp, tol)?;
    let lmps = extract_lmps(&sol, case.ptdf);
    Ok((sol, lmps))
}

/// One round: schedule against `prev`, bid, re-dispatch.
pub fn aus_step(
    case: &MarketCase<'_>,
    config: &BessConfig,
    periods: Range<usize>,
    prev: &LmpVector,
    params: &AusParams,
) -> Result<AusStep, MarketError> {
    aus_step_at(case, config, periods, prev, params, 0)
}

fn aus_step_at(
    case: &MarketCase<'_>,
    config: &BessConfig,
    periods: Range<usize>,
    prev: &LmpVector,
    params: &AusParams,
    iteration: usize,
) -> Result<AusStep, MarketError> {
    let (cands, caps) = config.resolve(case.catalog).map_err(MarketError::Config)?;
    let cands: Vec<BessCandidate> = cands.into_iter().cloned().collect();
    let sched_err = |source| MarketError::Schedule { iteration, source };
    let prices = prices_at(prev, case.net, &cands).map_err(sched_err)?;
    let dt = case.loads.period_hours;
    let milp = build_fixed_schedule(&cands, &caps, &prices, dt, config.budget, params.variant).map_err(sched_err)?;
    let schedule = solve_schedule(&milp).map_err(sched_err)?;
    let buses: Vec<_> = cands.iter().map(|c| c.bus).collect();
    let bids = make_bids(&schedule, &buses, &prices, params.margin).map_err(sched_err)?;
    let (dispatch, lmps) = dispatch_with(case, &bids, periods, &params.tolerances)
        .map_err(|source| MarketError::Dispatch { iteration, source })?;
    Ok(AusStep { schedule, bids, dispatch, lmps })
}

/// Runs the alternating scheme over `periods`. Non-convergence is reported
/// in the outcome, not as an error.
pub fn run_aus(
    case: &MarketCase<'_>,
    config: &BessConfig,
    periods: Range<usize>,
    params: &AusParams,
) -> Result<AusOutcome, MarketError> {
    if params.max_iter == 0 || !(params.epsilon >= 0.0) {
        return Err(MarketError::Config("need max_iter >= 1 and epsilon >= 0".into()));
    }
    let investment = config.investment(case.catalog).map_err(MarketError::Config)?;
    if investment > config.budget * (1.0 + 1e-12) {
        return Err(MarketError::Schedule {
            iteration: 0,
            source: ScheduleError::InfeasibleByBudget { investment, budget: config.budget },
        });
    }
    let (base_dispatch, base_lmps) = dispatch_with(case, &BidSet::empty(), periods.clone(), &params.tolerances)
        .map_err(|source| MarketError::Dispatch { iteration: 0, source })?;
    let dt = case.loads.period_hours;

    let mut prev = base_lmps.clone();
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut best: Option<(f64, usize, AusStep)> = None;
    let mut last: Option<AusStep> = None;
    let mut oscillation = false;
    let mut converged = false;

    for k in 1..=params.max_iter {
        let step = aus_step_at(case, config, periods.clone(), &prev, params, k)?;
        let delta = price_delta(&step.lmps, &prev)?;
        let g = battery_cost(&step.dispatch, &step.lmps, case.net, &step.bids, dt);
        trace.push(TraceEntry {
            k,
            delta,
            f: step.dispatch.total_cost,
            g,
            lmp_mean: step.lmps.bus_means(),
        });
        debug!("AUS k={k} delta={delta:.6e} f={:.4} g={g:.4}", step.dispatch.total_cost);
        prev = step.lmps.clone();
        if best.as_ref().is_none_or(|(d, _, _)| delta < *d) {
            best = Some((delta, k, step.clone()));
        }
        last = Some(step);
        if delta < params.epsilon {
            converged = true;
            break;
        }
        if k >= 3 && trace[k - 1].delta >= trace[k - 2].delta && trace[k - 2].delta >= trace[k - 3].delta {
            oscillation = true;
            info!("AUS price change stopped shrinking at k={k}; returning best iterate");
            break;
        }
    }

    let iterations = trace.len();
    let (step, returned_iteration) = if converged {
        (last.expect("at least one iteration"), iterations)
    } else {
        let (_, k, s) = best.expect("at least one iteration");
        (s, k)
    };
    let final_delta = trace.last().map_or(0.0, |e| e.delta);
    if !converged {
        info!("AUS did not converge in {iterations} iterations (final delta {final_delta:.3e})");
    }
    Ok(AusOutcome {
        dispatch: step.dispatch,
        schedule: step.schedule,
        bids: step.bids,
        lmps: step.lmps,
        base_lmps,
        base_dispatch,
        report: ConvergenceReport { converged, iterations, final_delta, oscillation, returned_iteration },
        trace,
    })
}

/// One flag per consecutive pair of trace entries: both `f` and `g`
/// strictly decreased.
pub fn pareto_check(trace: &[TraceEntry]) -> Vec<bool> {
    trace.windows(2).map(|w| w[1].f < w[0].f - 1e-9 && w[1].g < w[0].g - 1e-9).collect()
}

/// Which price of a bid a deviation scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BidSide {
    Charge,
    Discharge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationPoint {
    pub battery_id: u32,
    pub side: BidSide,
    pub factor: f64,
    pub f: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub f: f64,
    pub g: f64,
    pub points: Vec<DeviationPoint>,
}

impl DeviationReport {
    /// Deviations lowering the battery cost without raising the system cost.
    pub fn improving(&self, tol: f64) -> Vec<&DeviationPoint> {
        self.points.iter().filter(|p| p.g < self.g - tol && p.f <= self.f + tol).collect()
    }
}

/// `n` evenly spaced factors on `[lo, hi]`.
pub fn factor_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Re-dispatches with one battery's charge or discharge prices scaled by
/// each factor in turn, all other bids held at the converged values.
pub fn deviation_grid(
    case: &MarketCase<'_>,
    outcome: &AusOutcome,
    factors: &[f64],
    tol: &Tolerances,
) -> Result<DeviationReport, MarketError> {
    let periods = outcome.dispatch.periods.clone();
    let dt = case.loads.period_hours;
    let g0 = battery_cost(&outcome.dispatch, &outcome.lmps, case.net, &outcome.bids, dt);
    let mut points = Vec::new();
    for (k, bid) in outcome.bids.bids.iter().enumerate() {
        for side in [BidSide::Charge, BidSide::Discharge] {
            for &s in factors {
                let mut bids = outcome.bids.clone();
                let b: &mut BatteryBid = &mut bids.bids[k];
                let prices = match side {
                    BidSide::Charge => &mut b.charge_price,
                    BidSide::Discharge => &mut b.discharge_price,
                };
                prices.iter_mut().for_each(|p| *p *= s);
                let (d, l) = dispatch_with(case, &bids, periods.clone(), tol)
                    .map_err(|source| MarketError::Dispatch { iteration: 0, source })?;
                points.push(DeviationPoint {
                    battery_id: bid.battery_id,
                    side,
                    factor: s,
                    f: d.total_cost,
                    g: battery_cost(&d, &l, case.net, &bids, dt),
                });
            }
        }
    }
    Ok(DeviationReport { f: outcome.dispatch.total_cost, g: g0, points })
}

/// Cleared storage respects its own offers: discharge only where the offer
/// is at most the local price, charge only where the bid covers it.
/// Returns the largest violation in $/MWh.
pub fn clearing_violation(outcome: &AusOutcome, net: &PowerNetwork) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, bid) in outcome.bids.bids.iter().enumerate() {
        let b = net.bus_index(bid.bus).expect("validated bus");
        for t in 0..outcome.dispatch.num_periods() {
            let lam = outcome.lmps.at(b, t);
            if outcome.dispatch.discharge[k][t] > 1e-7 {
                worst = worst.max(bid.discharge_price[t] - lam);
            }
            if outcome.dispatch.charge[k][t] > 1e-7 {
                worst = worst.max(lam - (-bid.charge_price[t]));
            }
        }
    }
    worst
}
