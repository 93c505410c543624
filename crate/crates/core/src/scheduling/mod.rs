//! Storage owner's self-scheduling problem and the bidding strategy that
//! turns a schedule into dispatch offers.
//!
//! For each candidate `i` with capacity `c`, over periods `t = 0..T` with
//! length `dt` hours and SOC points `e_0..e_T`:
//!
//! ```text
//! min  F y + G c + sum_t lambda_t dt (pc_t - pd_t)
//!      0 <= pc_t <= kc c,  0 <= pd_t <= kd c
//!      Sl c <= e_t <= Su c
//!      e_{t+1} = e_t + eta_c dt pc_t - dt / eta_d pd_t
//!      e_0 = s0 c,  e_T >= e_0
//!      c <= M y,  sum (F y + G c) <= A
//! ```
//!
//! `M = (A - F) / G` clipped at zero. The zero-fixed-cost variant drops `y`
//! and the link row. The complementarity variant adds a binary `z_t` with
//! `pc_t <= kc M z_t` and `pd_t <= kd M (1 - z_t)`.

mod bids;
mod candidate;
mod io;

pub use bids::{make_bids, BidStrategy, MarginStrategy, DEFAULT_MARGIN};
pub use candidate::{load_candidates, write_candidates, BessCandidate, BessConfig, Site};
pub use io::{read_schedule_csv, write_schedule_csv, ScheduleRows};

use crate::dispatch::LmpVector;
use crate::lp::{solve_milp_with, LinearProgram, LpError, LpStatus, MilpOptions, MilpProblem, RowKind};
use crate::network::PowerNetwork;
use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("invalid schedule input: {0}")]
    Input(String),
    #[error("investment {investment} exceeds budget {budget}")]
    InfeasibleByBudget { investment: f64, budget: f64 },
    #[error("schedule infeasible")]
    Infeasible,
    #[error("schedule unbounded")]
    Unbounded,
    #[error(transparent)]
    Solver(#[from] LpError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantSpec {
    /// Treat every fixed cost as zero and drop the install binaries.
    pub zero_fixed_cost: bool,
    /// Forbid simultaneous charging and discharging.
    pub enforce_complementarity: bool,
}

#[derive(Debug, Clone)]
struct Columns {
    capacity: usize,
    install: Option<usize>,
    charge: Vec<usize>,
    discharge: Vec<usize>,
    soc: Vec<usize>,
}

/// Schedule MILP plus the layout needed to read it back.
#[derive(Debug, Clone)]
pub struct ScheduleMilp {
    pub problem: MilpProblem,
    pub candidates: Vec<BessCandidate>,
    /// `[candidate][t]`
    pub prices: Vec<Vec<f64>>,
    pub period_hours: f64,
    pub variant: VariantSpec,
    columns: Vec<Columns>,
}

impl ScheduleMilp {
    pub fn capacity_var(&self, i: usize) -> usize {
        self.columns[i].capacity
    }

    pub fn charge_var(&self, i: usize, t: usize) -> usize {
        self.columns[i].charge[t]
    }

    pub fn discharge_var(&self, i: usize, t: usize) -> usize {
        self.columns[i].discharge[t]
    }
}

/// Builds the investment problem: capacities and install decisions are free.
pub fn build_schedule(
    candidates: &[BessCandidate],
    prices: &[Vec<f64>],
    period_hours: f64,
    budget: f64,
    variant: VariantSpec,
) -> Result<ScheduleMilp, ScheduleError> {
    build(candidates, prices, period_hours, budget, variant, None)
}

/// Builds the operating problem for already-sized batteries; investment
/// terms are constants.
pub fn build_fixed_schedule(
    candidates: &[BessCandidate],
    capacities: &[f64],
    prices: &[Vec<f64>],
    period_hours: f64,
    budget: f64,
    variant: VariantSpec,
) -> Result<ScheduleMilp, ScheduleError> {
    if capacities.len() != candidates.len() || capacities.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(ScheduleError::Input("one finite nonnegative capacity per candidate".into()));
    }
    let investment: f64 = candidates
        .iter()
        .zip(capacities)
        .filter(|(_, &c)| c > 0.0)
        .map(|(k, &c)| if variant.zero_fixed_cost { 0.0 } else { k.fixed_cost } + k.unit_cost * c)
        .sum();
    if investment > budget * (1.0 + 1e-12) {
        return Err(ScheduleError::InfeasibleByBudget { investment, budget });
    }
    build(candidates, prices, period_hours, budget, variant, Some(capacities))
}

fn build(
    candidates: &[BessCandidate],
    prices: &[Vec<f64>],
    dt: f64,
    budget: f64,
    variant: VariantSpec,
    fixed: Option<&[f64]>,
) -> Result<ScheduleMilp, ScheduleError> {
    if prices.len() != candidates.len() {
        return Err(ScheduleError::Input("one price series per candidate".into()));
    }
    let horizon = prices.first().map_or(0, Vec::len);
    if prices.iter().any(|p| p.len() != horizon || p.iter().any(|v| !v.is_finite())) {
        return Err(ScheduleError::Input("price series must be finite and share a horizon".into()));
    }
    if !(dt > 0.0) || !(budget >= 0.0) {
        return Err(ScheduleError::Input("period length must be positive and budget nonnegative".into()));
    }
    for c in candidates {
        c.validate().map_err(ScheduleError::Input)?;
    }

    let mut lp = LinearProgram::new();
    let mut binaries = Vec::new();
    let mut columns = Vec::with_capacity(candidates.len());
    let mut budget_row = Vec::new();

    for (i, cand) in candidates.iter().enumerate() {
        let fixed_cost = if variant.zero_fixed_cost { 0.0 } else { cand.fixed_cost };
        let (capacity, install, big_m) = match fixed {
            Some(caps) => {
                let c = caps[i];
                let cap = lp.add_var(cand.unit_cost, c, c);
                let on = if c > 0.0 { 1.0 } else { 0.0 };
                let y = (!variant.zero_fixed_cost).then(|| lp.add_var(fixed_cost, on, on));
                (cap, y, c)
            }
            None => {
                let m = cand.capacity_cap(budget, variant.zero_fixed_cost);
                if !m.is_finite() {
                    return Err(ScheduleError::Input(format!(
                        "candidate {} has zero unit cost; its capacity is unbounded",
                        cand.id
                    )));
                }
                let cap = lp.add_var(cand.unit_cost, 0.0, m);
                let y = if variant.zero_fixed_cost {
                    None
                } else {
                    let y = lp.add_var(fixed_cost, 0.0, 1.0);
                    binaries.push(y);
                    lp.add_row([(cap, 1.0), (y, -m)], RowKind::LessEqual(0.0));
                    budget_row.push((y, fixed_cost));
                    Some(y)
                };
                budget_row.push((cap, cand.unit_cost));
                (cap, y, m)
            }
        };

        let price = &prices[i];
        let charge: Vec<usize> = price.iter().map(|&l| lp.add_var(l * dt, 0.0, f64::INFINITY)).collect();
        let discharge: Vec<usize> = price.iter().map(|&l| lp.add_var(-l * dt, 0.0, f64::INFINITY)).collect();
        let soc: Vec<usize> = (0..=horizon).map(|_| lp.add_var(0.0, 0.0, f64::INFINITY)).collect();

        for t in 0..horizon {
            lp.add_row([(charge[t], 1.0), (capacity, -cand.kappa_c)], RowKind::LessEqual(0.0));
            lp.add_row([(discharge[t], 1.0), (capacity, -cand.kappa_d)], RowKind::LessEqual(0.0));
            lp.add_row(
                [
                    (soc[t + 1], 1.0),
                    (soc[t], -1.0),
                    (charge[t], -cand.eta_c * dt),
                    (discharge[t], dt / cand.eta_d),
                ],
                RowKind::Equal(0.0),
            );
            if variant.enforce_complementarity {
                let z = lp.add_var(0.0, 0.0, 1.0);
                binaries.push(z);
                lp.add_row([(charge[t], 1.0), (z, -cand.kappa_c * big_m)], RowKind::LessEqual(0.0));
                let kd_m = cand.kappa_d * big_m;
                lp.add_row([(discharge[t], 1.0), (z, kd_m)], RowKind::LessEqual(kd_m));
            }
        }
        for &e in &soc {
            lp.add_row([(e, 1.0), (capacity, -cand.soc_min)], RowKind::GreaterEqual(0.0));
            lp.add_row([(e, 1.0), (capacity, -cand.soc_max)], RowKind::LessEqual(0.0));
        }
        lp.add_row([(soc[0], 1.0), (capacity, -cand.initial_soc())], RowKind::Equal(0.0));
        lp.add_row([(soc[horizon], 1.0), (soc[0], -1.0)], RowKind::GreaterEqual(0.0));

        columns.push(Columns { capacity, install, charge, discharge, soc });
    }
    if fixed.is_none() && !budget_row.is_empty() {
        lp.add_row(budget_row, RowKind::LessEqual(budget));
    }

    Ok(ScheduleMilp {
        problem: MilpProblem { base: lp, binary_vars: binaries },
        candidates: candidates.to_vec(),
        prices: prices.to_vec(),
        period_hours: dt,
        variant,
        columns,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSolution {
    pub candidate_ids: Vec<u32>,
    pub capacities: Vec<f64>,
    pub installed: Vec<bool>,
    /// `[candidate][t]`, MW.
    pub charge: Vec<Vec<f64>>,
    pub discharge: Vec<Vec<f64>>,
    /// `[candidate][t]` for `t = 0..=T`, MWh at the start of each period.
    pub soc: Vec<Vec<f64>>,
    /// Investment plus net energy payments.
    pub objective: f64,
    pub investment: f64,
    /// `[candidate][t]`: `lambda_t dt (pc_t - pd_t)`, the battery's net
    /// energy payment (negative when it earns).
    pub cashflow: Vec<Vec<f64>>,
    pub period_hours: f64,
    /// The node limit stopped branch-and-bound early.
    pub node_limit_reached: bool,
}

impl ScheduleSolution {
    pub fn num_periods(&self) -> usize {
        self.charge.first().map_or(0, Vec::len)
    }

    /// Energy revenue over the horizon: minus the summed cashflow.
    pub fn revenue(&self) -> f64 {
        -self.cashflow.iter().flatten().sum::<f64>()
    }

    pub fn complementarity_violation(&self) -> f64 {
        max_product(&self.charge, &self.discharge)
    }
}

pub(crate) fn max_product(charge: &[Vec<f64>], discharge: &[Vec<f64>]) -> f64 {
    charge
        .iter()
        .flatten()
        .zip(discharge.iter().flatten())
        .map(|(c, d)| (c * d).max(0.0))
        .fold(0.0, f64::max)
}

/// Anything reporting charge and discharge trajectories.
pub trait ChargeDischarge {
    fn charge(&self) -> &[Vec<f64>];
    fn discharge(&self) -> &[Vec<f64>];
}

impl ChargeDischarge for ScheduleSolution {
    fn charge(&self) -> &[Vec<f64>] {
        &self.charge
    }
    fn discharge(&self) -> &[Vec<f64>] {
        &self.discharge
    }
}

impl ChargeDischarge for crate::dispatch::DispatchSolution {
    fn charge(&self) -> &[Vec<f64>] {
        &self.charge
    }
    fn discharge(&self) -> &[Vec<f64>] {
        &self.discharge
    }
}

/// Largest `pc * pd` over all batteries and periods; zero iff no battery
/// charges and discharges in the same period.
pub fn complementarity_violation<S: ChargeDischarge>(sol: &S) -> f64 {
    max_product(sol.charge(), sol.discharge())
}

pub fn solve_schedule(m: &ScheduleMilp) -> Result<ScheduleSolution, ScheduleError> {
    solve_schedule_with(m, &MilpOptions::default())
}

pub fn solve_schedule_with(m: &ScheduleMilp, opts: &MilpOptions) -> Result<ScheduleSolution, ScheduleError> {
    let res = solve_milp_with(&m.problem, opts)?;
    let sol = res.solution;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(ScheduleError::Infeasible),
        LpStatus::Unbounded => return Err(ScheduleError::Unbounded),
    }
    let x = &sol.primal;
    // Clamp solver round-off so exported trajectories respect sign bounds.
    let read = |cols: &[usize]| -> Vec<f64> { cols.iter().map(|&j| x[j].max(0.0)).collect() };
    let dt = m.period_hours;
    let mut out = ScheduleSolution {
        candidate_ids: m.candidates.iter().map(|c| c.id).collect(),
        capacities: Vec::new(),
        installed: Vec::new(),
        charge: Vec::new(),
        discharge: Vec::new(),
        soc: Vec::new(),
        objective: sol.objective_value,
        investment: 0.0,
        cashflow: Vec::new(),
        period_hours: dt,
        node_limit_reached: res.node_limit_reached,
    };
    for (i, cols) in m.columns.iter().enumerate() {
        let cand = &m.candidates[i];
        let cap = x[cols.capacity].max(0.0);
        let y = cols.install.map_or(cap > 0.0, |j| x[j] > 0.5);
        let fixed = if m.variant.zero_fixed_cost || !y { 0.0 } else { cand.fixed_cost };
        out.investment += fixed + cand.unit_cost * cap;
        let pc = read(&cols.charge);
        let pd = read(&cols.discharge);
        out.cashflow.push(
            m.prices[i].iter().zip(pc.iter().zip(&pd)).map(|(l, (c, d))| l * dt * (c - d)).collect(),
        );
        out.capacities.push(cap);
        out.installed.push(y);
        out.charge.push(pc);
        out.discharge.push(pd);
        out.soc.push(read(&cols.soc));
    }
    log_soc_premise(m, &out);
    Ok(out)
}

/// Periods whose SOC leaves room for less than one full-rate period of
/// charging or discharging, per candidate.
pub fn soc_premise_violations(m: &ScheduleMilp, sol: &ScheduleSolution) -> Vec<(u32, usize)> {
    let dt = m.period_hours;
    let mut out = Vec::new();
    for (i, cand) in m.candidates.iter().enumerate() {
        let c = sol.capacities[i];
        if c <= 0.0 {
            continue;
        }
        let lo = cand.soc_min * c + cand.kappa_d * c / cand.eta_d * dt;
        let hi = cand.soc_max * c - cand.kappa_c * c * cand.eta_c * dt;
        for (t, &e) in sol.soc[i][..sol.num_periods()].iter().enumerate() {
            if e < lo - 1e-9 || e > hi + 1e-9 {
                out.push((cand.id, t));
            }
        }
    }
    out
}

fn log_soc_premise(m: &ScheduleMilp, sol: &ScheduleSolution) {
    if log::log_enabled!(log::Level::Debug) {
        let v = soc_premise_violations(m, sol);
        if !v.is_empty() {
            debug!("SOC outside the interior band at {} (battery, period) pairs", v.len());
        }
    }
}

/// Prices at each candidate's bus, `[candidate][t]`.
pub fn prices_at(lmps: &LmpVector, net: &PowerNetwork, candidates: &[BessCandidate]) -> Result<Vec<Vec<f64>>, ScheduleError> {
    candidates
        .iter()
        .map(|c| {
            net.bus_index(c.bus)
                .map(|b| lmps.values[b].clone())
                .ok_or_else(|| ScheduleError::Input(format!("candidate {} at unknown bus {}", c.id, c.bus)))
        })
        .collect()
}
