//! DC economic dispatch with storage bids, nodal prices and congestion
//! scores.
//!
//! Shift factors are injection oriented (see [`PtdfMatrix`]). Line duals are
//! stored as nonnegative magnitudes: `pi_plus` prices the upper flow limit,
//! `pi_minus` the lower one. With that orientation the nodal price is
//!
//! `lambda_b = mu - sum_l SF_lb (pi_plus_l - pi_minus_l)`
//!
//! so a binding upper limit raises the price at buses whose injection
//! relieves it.

mod io;

pub use io::{read_congestion_csv, read_lmp_csv, write_congestion_csv, write_lmp_csv};

use crate::lp::{solve_lp_with, LinearProgram, LpError, LpSolution, LpStatus, RowKind, Tolerances};
use crate::network::{BusId, LoadProfile, PowerNetwork, PtdfMatrix};
use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("malformed dispatch input: {0}")]
    Structure(String),
    #[error("dispatch infeasible in period(s) {periods:?}")]
    Infeasible { periods: Vec<usize> },
    #[error("dispatch unbounded")]
    Unbounded,
    #[error(transparent)]
    Solver(#[from] LpError),
}

/// One battery's offer over the dispatch window. Vectors are indexed by
/// period relative to the window start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryBid {
    pub battery_id: u32,
    pub bus: BusId,
    /// Willingness to pay for charging, $/MWh, nonpositive.
    pub charge_price: Vec<f64>,
    /// Offer price for discharging, $/MWh, nonnegative.
    pub discharge_price: Vec<f64>,
    pub charge_lower: Vec<f64>,
    pub charge_upper: Vec<f64>,
    pub discharge_lower: Vec<f64>,
    pub discharge_upper: Vec<f64>,
}

impl BatteryBid {
    /// A bid that can never clear.
    pub fn idle(battery_id: u32, bus: BusId, periods: usize) -> Self {
        Self {
            battery_id,
            bus,
            charge_price: vec![0.0; periods],
            discharge_price: vec![0.0; periods],
            charge_lower: vec![0.0; periods],
            charge_upper: vec![0.0; periods],
            discharge_lower: vec![0.0; periods],
            discharge_upper: vec![0.0; periods],
        }
    }

    pub fn periods(&self) -> usize {
        self.charge_price.len()
    }

    fn validate(&self, periods: usize) -> Result<(), DispatchError> {
        let err = |m: String| Err(DispatchError::Structure(format!("battery {}: {m}", self.battery_id)));
        let vecs = [
            &self.charge_price,
            &self.discharge_price,
            &self.charge_lower,
            &self.charge_upper,
            &self.discharge_lower,
            &self.discharge_upper,
        ];
        if vecs.iter().any(|v| v.len() != periods) {
            return err(format!("bid vectors must cover {periods} periods"));
        }
        for t in 0..periods {
            if !(self.charge_price[t] <= 0.0) || !(self.discharge_price[t] >= 0.0) {
                return err(format!("period {t}: need charge price <= 0 <= discharge price"));
            }
            let ordered = |lo: f64, hi: f64| lo >= 0.0 && lo <= hi && hi.is_finite();
            if !ordered(self.charge_lower[t], self.charge_upper[t])
                || !ordered(self.discharge_lower[t], self.discharge_upper[t])
            {
                return err(format!("period {t}: quantity bounds must satisfy 0 <= lower <= upper < inf"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BidSet {
    pub bids: Vec<BatteryBid>,
}

impl BidSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }
}

/// Dispatch LP together with the column and row layout needed to read the
/// solution back.
#[derive(Debug, Clone)]
pub struct DispatchLp {
    pub lp: LinearProgram,
    pub periods: Range<usize>,
    gen_vars: Vec<Vec<usize>>,
    charge_vars: Vec<Vec<usize>>,
    discharge_vars: Vec<Vec<usize>>,
    balance_rows: Vec<usize>,
    line_rows: Vec<Vec<usize>>,
    /// `sum_b SF_lb LD_bt`, the flow caused by load alone.
    load_flow: Vec<Vec<f64>>,
    pub battery_ids: Vec<u32>,
    battery_buses: Vec<usize>,
}

impl DispatchLp {
    pub fn num_periods(&self) -> usize {
        self.balance_rows.len()
    }

    pub fn gen_var(&self, g: usize, t: usize) -> usize {
        self.gen_vars[g][t]
    }

    pub fn charge_var(&self, battery: usize, t: usize) -> usize {
        self.charge_vars[battery][t]
    }

    pub fn discharge_var(&self, battery: usize, t: usize) -> usize {
        self.discharge_vars[battery][t]
    }

    /// Dense bus index of bidding battery `battery`.
    pub fn battery_bus(&self, battery: usize) -> usize {
        self.battery_buses[battery]
    }

    pub fn balance_row(&self, t: usize) -> usize {
        self.balance_rows[t]
    }

    pub fn line_row(&self, l: usize, t: usize) -> usize {
        self.line_rows[l][t]
    }

    /// Sub-problem holding only period `t` (periods are decoupled).
    fn period_lp(&self, t: usize) -> LinearProgram {
        let mut cols: Vec<usize> = self.gen_vars.iter().map(|v| v[t]).collect();
        cols.extend(self.charge_vars.iter().map(|v| v[t]));
        cols.extend(self.discharge_vars.iter().map(|v| v[t]));
        let mut remap = vec![usize::MAX; self.lp.num_vars()];
        let mut sub = LinearProgram::new();
        for &j in &cols {
            let (lo, hi) = self.lp.var_bounds[j];
            remap[j] = sub.add_var(self.lp.objective[j], lo, hi);
        }
        let rows = std::iter::once(self.balance_rows[t]).chain(self.line_rows.iter().map(|r| r[t]));
        for i in rows {
            sub.add_row(self.lp.rows[i].iter().map(|&(j, a)| (remap[j], a)), self.lp.row_kinds[i]);
        }
        sub
    }
}

/// Builds the dispatch LP for periods `periods` of `loads`.
///
/// Variables per period: one output per generator, then one charge and one
/// discharge column per bidding battery. Rows per period: the power balance
/// equality, then one range row per line bounding its flow.
pub fn build_dispatch(
    net: &PowerNetwork,
    ptdf: &PtdfMatrix,
    loads: &LoadProfile,
    bids: &BidSet,
    periods: Range<usize>,
) -> Result<DispatchLp, DispatchError> {
    if periods.end > loads.horizon() || periods.is_empty() {
        return Err(DispatchError::Structure(format!(
            "periods {periods:?} outside load horizon {}",
            loads.horizon()
        )));
    }
    if ptdf.num_lines() != net.lines.len() || ptdf.num_buses() != net.num_buses() {
        return Err(DispatchError::Structure("shift factors do not match the network".into()));
    }
    let nt = periods.len();
    let mut battery_buses = Vec::with_capacity(bids.bids.len());
    for (k, b) in bids.bids.iter().enumerate() {
        b.validate(nt)?;
        if bids.bids[..k].iter().any(|o| o.battery_id == b.battery_id) {
            return Err(DispatchError::Structure(format!("duplicate bid for battery {}", b.battery_id)));
        }
        let bus = net.bus_index(b.bus).ok_or_else(|| {
            DispatchError::Structure(format!("bid for battery {} at unknown bus {}", b.battery_id, b.bus))
        })?;
        battery_buses.push(bus);
    }
    let load = loads.bus_loads(net, periods.start, periods.end);

    let mut lp = LinearProgram::new();
    let mut gen_vars = vec![Vec::with_capacity(nt); net.generators.len()];
    let mut charge_vars = vec![Vec::with_capacity(nt); bids.bids.len()];
    let mut discharge_vars = vec![Vec::with_capacity(nt); bids.bids.len()];
    let mut balance_rows = Vec::with_capacity(nt);
    let mut line_rows = vec![Vec::with_capacity(nt); net.lines.len()];
    let mut load_flow = vec![Vec::with_capacity(nt); net.lines.len()];

    for t in 0..nt {
        for (g, gen) in net.generators.iter().enumerate() {
            gen_vars[g].push(lp.add_var(gen.marginal_cost, gen.p_min, gen.p_max));
        }
        for (k, b) in bids.bids.iter().enumerate() {
            charge_vars[k].push(lp.add_var(b.charge_price[t], b.charge_lower[t], b.charge_upper[t]));
            discharge_vars[k].push(lp.add_var(b.discharge_price[t], b.discharge_lower[t], b.discharge_upper[t]));
        }

        let demand: f64 = load.iter().map(|l| l[t]).sum();
        let mut balance: Vec<(usize, f64)> = gen_vars.iter().map(|v| (v[t], 1.0)).collect();
        for k in 0..bids.bids.len() {
            balance.push((discharge_vars[k][t], 1.0));
            balance.push((charge_vars[k][t], -1.0));
        }
        balance_rows.push(lp.add_row(balance, RowKind::Equal(demand)));

        for (l, line) in net.lines.iter().enumerate() {
            let sf = |b: usize| ptdf.get(l, b);
            let mut row: Vec<(usize, f64)> =
                net.generators.iter().enumerate().map(|(g, gen)| (gen_vars[g][t], sf(gen.bus))).collect();
            for (k, &bus) in battery_buses.iter().enumerate() {
                row.push((discharge_vars[k][t], sf(bus)));
                row.push((charge_vars[k][t], -sf(bus)));
            }
            let lf: f64 = (0..net.num_buses()).map(|b| sf(b) * load[b][t]).sum();
            load_flow[l].push(lf);
            line_rows[l].push(lp.add_row(row, RowKind::Range(lf - line.flow_limit, lf + line.flow_limit)));
        }
    }

    Ok(DispatchLp {
        lp,
        periods,
        gen_vars,
        charge_vars,
        discharge_vars,
        balance_rows,
        line_rows,
        load_flow,
        battery_ids: bids.bids.iter().map(|b| b.battery_id).collect(),
        battery_buses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub periods: Range<usize>,
    /// `[generator][t]`
    pub gen_output: Vec<Vec<f64>>,
    /// `[battery][t]`, aligned with `battery_ids`.
    pub charge: Vec<Vec<f64>>,
    pub discharge: Vec<Vec<f64>>,
    pub battery_ids: Vec<u32>,
    /// Balance dual per period.
    pub mu: Vec<f64>,
    /// `[line][t]`, both nonnegative; at most one is nonzero.
    pub pi_plus: Vec<Vec<f64>>,
    pub pi_minus: Vec<Vec<f64>>,
    /// `[line][t]`, MW from the line's `from` bus to its `to` bus.
    pub flows: Vec<Vec<f64>>,
    pub total_cost: f64,
    /// Vertex duals may not be unique.
    pub degenerate: bool,
    #[serde(skip)]
    pub raw: Option<LpSolution>,
}

impl DispatchSolution {
    pub fn num_periods(&self) -> usize {
        self.mu.len()
    }

    /// Largest `p^c * p^d` over batteries and periods.
    pub fn complementarity_violation(&self) -> f64 {
        crate::scheduling::max_product(&self.charge, &self.discharge)
    }
}

pub fn solve_dispatch(dlp: &DispatchLp) -> Result<DispatchSolution, DispatchError> {
    solve_dispatch_with(dlp, &Tolerances::default())
}

pub fn solve_dispatch_with(dlp: &DispatchLp, tol: &Tolerances) -> Result<DispatchSolution, DispatchError> {
    let sol = solve_lp_with(&dlp.lp, tol)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => return Err(DispatchError::Unbounded),
        LpStatus::Infeasible => {
            let mut periods = Vec::new();
            for t in 0..dlp.num_periods() {
                let s = solve_lp_with(&dlp.period_lp(t), tol)?;
                if s.status == LpStatus::Infeasible {
                    periods.push(dlp.periods.start + t);
                }
            }
            // Block structure guarantees a culprit; keep the whole window if round-off hides it.
            if periods.is_empty() {
                periods = dlp.periods.clone().collect();
            }
            return Err(DispatchError::Infeasible { periods });
        }
    }
    let x = &sol.primal;
    let take = |vars: &Vec<Vec<usize>>| -> Vec<Vec<f64>> {
        vars.iter().map(|v| v.iter().map(|&j| x[j]).collect()).collect()
    };
    let mu = dlp.balance_rows.iter().map(|&i| sol.row_duals[i]).collect();
    let line_dual = |sign: f64| -> Vec<Vec<f64>> {
        dlp.line_rows
            .iter()
            .map(|rows| rows.iter().map(|&i| (sign * sol.row_duals[i]).max(0.0)).collect())
            .collect()
    };
    let activity = dlp.lp.row_activity(x);
    let flows = dlp
        .line_rows
        .iter()
        .zip(&dlp.load_flow)
        .map(|(rows, lf)| rows.iter().zip(lf).map(|(&i, f)| activity[i] - f).collect())
        .collect();

    Ok(DispatchSolution {
        periods: dlp.periods.clone(),
        gen_output: take(&dlp.gen_vars),
        charge: take(&dlp.charge_vars),
        discharge: take(&dlp.discharge_vars),
        battery_ids: dlp.battery_ids.clone(),
        mu,
        // Upper limit binds with a nonpositive row dual.
        pi_plus: line_dual(-1.0),
        pi_minus: line_dual(1.0),
        flows,
        total_cost: sol.objective_value,
        degenerate: sol.degenerate,
        raw: Some(sol),
    })
}

/// Nodal prices, `[bus][t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmpVector {
    pub values: Vec<Vec<f64>>,
    /// Absolute index of the first period.
    pub start: usize,
}

impl LmpVector {
    pub fn num_buses(&self) -> usize {
        self.values.len()
    }

    pub fn num_periods(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn at(&self, bus: usize, t: usize) -> f64 {
        self.values[bus][t]
    }

    /// Largest minus smallest price over all buses and periods.
    pub fn spread(&self) -> f64 {
        let it = || self.values.iter().flatten().copied();
        it().fold(f64::NEG_INFINITY, f64::max) - it().fold(f64::INFINITY, f64::min)
    }

    /// Mean price per bus.
    pub fn bus_means(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 })
            .collect()
    }
}

pub fn extract_lmps(sol: &DispatchSolution, ptdf: &PtdfMatrix) -> LmpVector {
    let nt = sol.num_periods();
    let values = (0..ptdf.num_buses())
        .map(|b| {
            (0..nt)
                .map(|t| {
                    let cong: f64 = (0..ptdf.num_lines())
                        .map(|l| ptdf.get(l, b) * (sol.pi_plus[l][t] - sol.pi_minus[l][t]))
                        .sum();
                    sol.mu[t] - cong
                })
                .collect()
        })
        .collect();
    LmpVector { values, start: sol.periods.start }
}

/// Per-bus congestion score averaged over every solved period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongestionScore {
    pub scores: Vec<f64>,
    pub periods: usize,
}

impl CongestionScore {
    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }
}

/// `S(b) = mean_t sum_l [ (-SF_lb)+ pi_plus_lt + (SF_lb)+ pi_minus_lt ]`.
///
/// Each term credits bus `b` for a binding limit that its injection would
/// relieve, i.e. for the congestion premium in its price; every term is
/// nonnegative.
pub fn congestion_score(history: &[&DispatchSolution], ptdf: &PtdfMatrix) -> Result<CongestionScore, DispatchError> {
    let periods: usize = history.iter().map(|s| s.num_periods()).sum();
    if periods == 0 {
        return Err(DispatchError::Structure("congestion score needs at least one solved period".into()));
    }
    let mut scores = vec![0.0; ptdf.num_buses()];
    for sol in history {
        for l in 0..ptdf.num_lines() {
            let (up, down): (f64, f64) = (sol.pi_plus[l].iter().sum(), sol.pi_minus[l].iter().sum());
            for (b, s) in scores.iter_mut().enumerate() {
                let sf = ptdf.get(l, b);
                *s += (-sf).max(0.0) * up + sf.max(0.0) * down;
            }
        }
    }
    for s in &mut scores {
        *s /= periods as f64;
    }
    Ok(CongestionScore { scores, periods })
}
