//! Measurements behind the oracle suites; each returns numbers so callers
//! can assert or report them.
#![allow(dead_code)]

use super::gen;
use bess_core::dispatch::{
    build_dispatch, extract_lmps, solve_dispatch_with, BidSet, DispatchError, DispatchLp, DispatchSolution,
};
use bess_core::lp::{
    check_certificate, objective_sensitivity_range, solve_lp, LinearProgram, LpStatus, Tolerances,
};
use bess_core::planner::{
    congestion_seed, run_search, CapacitySpace, Method, SearchSettings, SearchSpace, SyntheticLandscape,
};
use bess_core::scheduling::{
    build_fixed_schedule, build_schedule, solve_schedule, BessCandidate, ScheduleMilp, VariantSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn solve(inst: &gen::Instance, bids: &BidSet) -> Result<(DispatchLp, DispatchSolution), DispatchError> {
    let dlp = build_dispatch(&inst.net, &inst.ptdf, &inst.loads, bids, 0..inst.loads.horizon())?;
    let sol = solve_dispatch_with(&dlp, &Tolerances::default())?;
    Ok((dlp, sol))
}

/// Feasible random single-period dispatch instances.
fn feasible_instances(seed: u64, count: usize, periods: usize) -> Vec<gen::Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let n = rng.random_range(2..=10);
        let inst = gen::network(&mut rng, n, periods);
        if solve(&inst, &BidSet::empty()).is_ok() {
            out.push(inst);
        }
    }
    out
}

#[derive(Debug, Default)]
pub struct FdReport {
    pub instances: usize,
    pub nondegenerate: usize,
    pub checked: usize,
    /// Steps whose price changed, i.e. that crossed a cost breakpoint.
    pub crossed: usize,
    pub max_rel_err: f64,
    pub max_seconds: f64,
}

/// Compares every bus price with the cost change of one extra MW of load.
/// Cost is convex piecewise linear in load, so a step whose end price equals
/// the start price is linear throughout; other steps are only counted.
pub fn lmp_finite_differences(seed: u64, count: usize) -> FdReport {
    let mut rep = FdReport::default();
    for inst in feasible_instances(seed, count, 1) {
        let start = Instant::now();
        rep.instances += 1;
        let (_, sol) = solve(&inst, &BidSet::empty()).unwrap();
        if sol.degenerate {
            continue;
        }
        rep.nondegenerate += 1;
        let lmps = extract_lmps(&sol, &inst.ptdf);
        for (b, bus) in inst.net.buses.iter().enumerate() {
            let mut loads = inst.loads.clone();
            loads.add_load(bus.id, 0, 1.0);
            let bumped = gen::Instance { net: inst.net.clone(), ptdf: inst.ptdf.clone(), loads };
            let Ok((_, s2)) = solve(&bumped, &BidSet::empty()) else { continue };
            let fd = s2.total_cost - sol.total_cost;
            let lam = lmps.at(b, 0);
            if s2.degenerate || (extract_lmps(&s2, &inst.ptdf).at(b, 0) - lam).abs() > 1e-9 {
                rep.crossed += 1;
                continue;
            }
            rep.checked += 1;
            rep.max_rel_err = rep.max_rel_err.max((fd - lam).abs() / lam.abs().max(1.0));
        }
        rep.max_seconds = rep.max_seconds.max(start.elapsed().as_secs_f64());
    }
    rep
}

#[derive(Debug, Default)]
pub struct KktReport {
    pub solves: usize,
    pub failures: usize,
    pub worst_gap: f64,
    pub worst_complementarity: f64,
}

impl KktReport {
    pub fn record(&mut self, lp: &LinearProgram, sol: &bess_core::lp::LpSolution) {
        if sol.status != LpStatus::Optimal {
            return;
        }
        let rep = check_certificate(lp, sol);
        self.solves += 1;
        if !rep.passes(&Tolerances::default()) {
            self.failures += 1;
        }
        self.worst_gap = self.worst_gap.max(rep.gap());
        self.worst_complementarity = self.worst_complementarity.max(rep.complementarity);
    }
}

/// Certificates of random dispatch solves with and without storage bids.
pub fn kkt_random_dispatch(seed: u64, count: usize) -> KktReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut rep = KktReport::default();
    for inst in feasible_instances(seed, count, 3) {
        for k in [0, 2] {
            let bids = if k == 0 { BidSet::empty() } else { gen::bids(&mut rng, &inst.net, k, 3) };
            if let Ok((dlp, sol)) = solve(&inst, &bids) {
                rep.record(&dlp.lp, sol.raw.as_ref().unwrap());
            }
        }
    }
    rep
}

#[derive(Debug, Default)]
pub struct SensitivityReport {
    pub pairs: usize,
    pub max_primal_change: f64,
    pub max_collinearity: f64,
}

/// Perturbs one bid price inside its reported range and re-solves.
pub fn sensitivity_pairs(seed: u64, want: usize) -> SensitivityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SensitivityReport::default();
    let mut attempts = 0;
    while rep.pairs < want && attempts < 50 * want {
        attempts += 1;
        let n = rng.random_range(2..=6);
        let inst = gen::network(&mut rng, n, 2);
        let bids = gen::bids(&mut rng, &inst.net, 2, 2);
        let Ok((dlp, sol)) = solve(&inst, &bids) else { continue };
        if sol.degenerate {
            continue;
        }
        let k = rng.random_range(0..2);
        let t = rng.random_range(0..2);
        let var = if rng.random_bool(0.5) { dlp.charge_var(k, t) } else { dlp.discharge_var(k, t) };
        let raw = sol.raw.as_ref().unwrap();
        let range = objective_sensitivity_range(&dlp.lp, raw, var).unwrap();
        let c = dlp.lp.objective[var];
        let lo = if range.coeff_low.is_finite() { range.coeff_low } else { c - 10.0 };
        let hi = if range.coeff_high.is_finite() { range.coeff_high } else { c + 10.0 };
        if hi - lo <= 1e-6 {
            continue;
        }
        let points = [lo + 0.2 * (hi - lo), lo + 0.5 * (hi - lo), lo + 0.8 * (hi - lo)];
        let mut lmps = Vec::new();
        let mut ok = true;
        for &p in &points {
            let mut moved = dlp.clone();
            moved.lp.objective[var] = p;
            let Ok(s) = solve_dispatch_with(&moved, &Tolerances::default()) else {
                ok = false;
                break;
            };
            let change = s.raw.as_ref().unwrap().primal.iter().zip(&raw.primal).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            rep.max_primal_change = rep.max_primal_change.max(change);
            lmps.push(extract_lmps(&s, &inst.ptdf));
        }
        if !ok {
            continue;
        }
        let w = (points[1] - points[0]) / (points[2] - points[0]);
        for b in 0..inst.net.num_buses() {
            for tt in 0..2 {
                let (a, m, z) = (lmps[0].at(b, tt), lmps[1].at(b, tt), lmps[2].at(b, tt));
                rep.max_collinearity = rep.max_collinearity.max((m - a - w * (z - a)).abs());
            }
        }
        rep.pairs += 1;
    }
    rep
}

fn schedule_instance(rng: &mut ChaCha8Rng, cands: usize, periods: usize) -> (Vec<BessCandidate>, Vec<Vec<f64>>) {
    let c: Vec<BessCandidate> = (0..cands).map(|i| gen::candidate(rng, i as u32 + 1, 1)).collect();
    let p = gen::prices(rng, cands, periods);
    (c, p)
}

/// Branch-and-bound against solving every binary assignment as an LP.
pub fn enumeration_gap(m: &ScheduleMilp) -> f64 {
    let bb = solve_schedule(m).unwrap().objective;
    let bins = &m.problem.binary_vars;
    assert!(bins.len() <= 12);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << bins.len()) {
        let mut lp = m.problem.base.clone();
        for (k, &j) in bins.iter().enumerate() {
            let v = f64::from((mask >> k) & 1);
            lp.var_bounds[j] = (v, v);
        }
        let sol = solve_lp(&lp).unwrap();
        if sol.status == LpStatus::Optimal {
            best = best.min(sol.objective_value);
        }
    }
    (bb - best).abs()
}

/// Largest B&B-versus-enumeration discrepancy over random instances.
pub fn milp_vs_enumeration(seed: u64, count: usize) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut max_bins = 0;
    for i in 0..count {
        let (cands, periods, comp) = match i % 3 {
            0 => (2, 4, true),
            1 => (3, 3, true),
            _ => (6, 6, false),
        };
        let (c, p) = schedule_instance(&mut rng, cands, periods);
        let variant = VariantSpec { zero_fixed_cost: false, enforce_complementarity: comp };
        let m = build_schedule(&c, &p, 1.0, 400.0, variant).unwrap();
        max_bins = max_bins.max(m.problem.binary_vars.len());
        worst = worst.max(enumeration_gap(&m));
    }
    (max_bins, worst)
}

#[derive(Debug, Default)]
pub struct VariantReport {
    pub instances: usize,
    /// Largest `zero_fixed - full`; should be <= 0.
    pub zero_fixed_excess: f64,
    /// Largest `unconstrained - complementarity`; should be <= 0.
    pub complementarity_deficit: f64,
    pub max_violation: f64,
    pub lp_seconds: f64,
    pub complementarity_seconds: f64,
}

/// Objective directions and timings of the model variants on shared data.
pub fn variant_directions(seed: u64, count: usize) -> VariantReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = VariantReport::default();
    let v = |z, c| VariantSpec { zero_fixed_cost: z, enforce_complementarity: c };
    for _ in 0..count {
        let (c, p) = schedule_instance(&mut rng, 3, 8);
        let obj = |variant| solve_schedule(&build_schedule(&c, &p, 1.0, 400.0, variant).unwrap()).unwrap();
        let full = obj(v(false, false)).objective;
        let zero = obj(v(true, false)).objective;
        let t = Instant::now();
        let lp = obj(v(true, false));
        rep.lp_seconds += t.elapsed().as_secs_f64();
        let t = Instant::now();
        let comp = obj(v(true, true));
        rep.complementarity_seconds += t.elapsed().as_secs_f64();
        rep.zero_fixed_excess = rep.zero_fixed_excess.max(zero - full);
        rep.complementarity_deficit = rep.complementarity_deficit.max(lp.objective - comp.objective);
        rep.max_violation = rep.max_violation.max(comp.complementarity_violation());
        rep.instances += 1;
    }
    rep
}

/// Full-model optimum against fixed-capacity solves on a capacity grid:
/// `(max over grid of (J* - J(c)), |J(c*) - J*|)`.
pub fn capacity_grid_oracle(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c, p) = schedule_instance(&mut rng, 1, 8);
    let budget = 400.0;
    let variant = VariantSpec::default();
    let full = solve_schedule(&build_schedule(&c, &p, 1.0, budget, variant).unwrap()).unwrap();
    let cap = c[0].capacity_cap(budget, false);
    let fixed = |x: f64| solve_schedule(&build_fixed_schedule(&c, &[x], &p, 1.0, budget, variant).unwrap()).unwrap().objective;
    let worst = (0..=40).map(|k| full.objective - fixed(cap * k as f64 / 40.0)).fold(f64::NEG_INFINITY, f64::max);
    (worst, (fixed(full.capacities[0]) - full.objective).abs())
}

/// Share of single-site seeds whose site is the first catalog entry.
pub fn seed_frequency(scores: [f64; 2], draws: usize, seed: u64) -> f64 {
    let catalog: Vec<BessCandidate> = (0..2)
        .map(|i| BessCandidate {
            id: i,
            bus: i + 1,
            fixed_cost: 0.0,
            unit_cost: 1.0,
            kappa_c: 0.25,
            kappa_d: 0.25,
            soc_min: 0.0,
            soc_max: 1.0,
            eta_c: 1.0,
            eta_d: 1.0,
            init_soc: None,
        })
        .collect();
    let space = SearchSpace::new(catalog, 1, CapacitySpace::Range { min: 1.0, max: 10.0 }, 100.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..draws)
        .filter(|_| congestion_seed(&space, &scores, 1, &mut rng).unwrap()[0].sites[0].candidate_id == 0)
        .count();
    hits as f64 / draws as f64
}

/// 20-site landscape with one dominant site.
pub fn synthetic_landscape(seed: u64) -> (SearchSpace, SyntheticLandscape) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = vec![5.0, 10.0, 20.0, 40.0];
    let catalog: Vec<BessCandidate> = (0..20)
        .map(|i| BessCandidate {
            id: i,
            bus: i + 1,
            fixed_cost: 10.0,
            unit_cost: 1.0,
            kappa_c: 0.25,
            kappa_d: 0.25,
            soc_min: 0.0,
            soc_max: 1.0,
            eta_c: 1.0,
            eta_d: 1.0,
            init_soc: None,
        })
        .collect();
    let dominant = rng.random_range(0..20);
    let value = (0..20).map(|i| if i == dominant { 10.0 } else { rng.random_range(0.5..3.0) }).collect();
    let best_capacity = (0..20).map(|_| levels[rng.random_range(0..levels.len())]).collect();
    let space = SearchSpace::new(catalog, 1, CapacitySpace::Grid { levels }, 1000.0).unwrap();
    let land = SyntheticLandscape { catalog_ids: (0..20).collect(), value, best_capacity, width: 50.0 };
    (space, land)
}

/// Median trials-to-optimum of both methods over paired seeds; runs that
/// never reach it count as `budget + 1`.
pub fn search_medians(seeds: u64, budget: usize) -> (f64, f64) {
    let mut tpe = Vec::new();
    let mut random = Vec::new();
    for seed in 0..seeds {
        let (space, land) = synthetic_landscape(1000 + seed);
        let opt = land.optimum(&space).unwrap();
        for (method, out) in [(Method::Tpe, &mut tpe), (Method::Random, &mut random)] {
            let settings = SearchSettings { method, trials: budget, seed, ..Default::default() };
            let h = run_search(&space, &land, &settings, Some(land.scores())).unwrap();
            out.push(h.trials_to_reach(opt, 1e-9).unwrap_or(budget + 1) as f64);
        }
    }
    (median(tpe), median(random))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Certificates of the storage-free and final dispatch of every shipped
/// fixture after an alternating run with its designed battery.
pub fn kkt_fixtures() -> KktReport {
    use bess_core::market::{run_aus, AusParams, MarketCase};
    let mut rep = KktReport::default();
    for name in super::FIXTURES {
        let f = super::fixture(name);
        let case = MarketCase { net: &f.net, ptdf: &f.ptdf, loads: &f.loads, catalog: &f.catalog };
        let out = run_aus(&case, &super::fixture_battery(name), 0..24, &AusParams::default()).unwrap();
        for (bids, sol) in [(BidSet::empty(), &out.base_dispatch), (out.bids.clone(), &out.dispatch)] {
            let dlp = build_dispatch(&f.net, &f.ptdf, &f.loads, &bids, 0..24).unwrap();
            rep.record(&dlp.lp, sol.raw.as_ref().unwrap());
        }
    }
    rep
}
