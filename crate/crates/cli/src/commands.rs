use crate::{CliError, ExitStatus, RunConfig};
use bess_core::dispatch::{
    build_dispatch, congestion_score, extract_lmps, solve_dispatch_with, write_congestion_csv, write_lmp_csv, BidSet,
};
use bess_core::market::{clearing_violation, run_aus, write_trace_json, ConvergenceReport, MarketCase};
use bess_core::network::{compute_ptdf, load_case, load_loads, LoadProfile, PowerNetwork, PtdfMatrix};
use bess_core::planner::{
    run_search, write_history_jsonl, write_summary_csv, write_timings_csv, MarketEvaluator, SearchSettings,
    SearchSpace,
};
use bess_core::scheduling::{
    build_fixed_schedule, build_schedule, load_candidates, prices_at, solve_schedule, write_schedule_csv,
    BessCandidate, BessConfig,
};
use log::info;
use serde::Serialize;
use std::ops::Range;
use std::path::Path;

struct Case {
    net: PowerNetwork,
    ptdf: PtdfMatrix,
    loads: LoadProfile,
}

fn load(cfg: &RunConfig) -> Result<Case, CliError> {
    let net = load_case(&cfg.case_dir)?;
    let ptdf = compute_ptdf(&net)?;
    let loads = load_loads(&cfg.loads, &net)?;
    Ok(Case { net, ptdf, loads })
}

fn catalog(cfg: &RunConfig) -> Result<Vec<BessCandidate>, CliError> {
    Ok(load_candidates(&cfg.candidates)?)
}

fn day_range(cfg: &RunConfig, loads: &LoadProfile) -> Result<Range<usize>, CliError> {
    let len = cfg.horizon.day_length;
    let days = loads.horizon().checked_div(len).unwrap_or(0);
    if cfg.day >= days {
        return Err(CliError::input(format!(
            "day {} out of range: the load profile holds {days} day(s) of {len} periods",
            cfg.day
        )));
    }
    Ok(cfg.day * len..(cfg.day + 1) * len)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::input(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::input(format!("{}: {e}", path.display()))
}

/// `ptdf.csv`.
pub fn cmd_ptdf(cfg: &RunConfig) -> Result<ExitStatus, CliError> {
    let net = load_case(&cfg.case_dir)?;
    let ptdf = compute_ptdf(&net)?;
    ptdf.write_csv(&net, &cfg.out_dir.join("ptdf.csv"))?;
    Ok(ExitStatus::Ok)
}

/// `lmp.csv`, `congestion.csv` and `dispatch.json` for one storage-free day.
pub fn cmd_dispatch(cfg: &RunConfig) -> Result<ExitStatus, CliError> {
    let case = load(cfg)?;
    let periods = day_range(cfg, &case.loads)?;
    let dlp = build_dispatch(&case.net, &case.ptdf, &case.loads, &BidSet::empty(), periods)?;
    let sol = solve_dispatch_with(&dlp, &cfg.aus.tolerances)?;
    let lmps = extract_lmps(&sol, &case.ptdf);
    let score = congestion_score(&[&sol], &case.ptdf)?;
    info!("dispatch cost {:.4}", sol.total_cost);
    write_lmp_csv(&cfg.out_dir.join("lmp.csv"), &case.net, &lmps)?;
    write_congestion_csv(&cfg.out_dir.join("congestion.csv"), &case.net, &score)?;
    write_json(&cfg.out_dir.join("dispatch.json"), &sol)?;
    Ok(ExitStatus::Ok)
}

/// Schedules against the day's storage-free prices. With no batteries
/// configured the whole catalog is sized within the budget.
pub fn cmd_schedule(cfg: &RunConfig) -> Result<ExitStatus, CliError> {
    let case = load(cfg)?;
    let catalog = catalog(cfg)?;
    let periods = day_range(cfg, &case.loads)?;
    let dlp = build_dispatch(&case.net, &case.ptdf, &case.loads, &BidSet::empty(), periods)?;
    let lmps = extract_lmps(&solve_dispatch_with(&dlp, &cfg.aus.tolerances)?, &case.ptdf);
    let dt = case.loads.period_hours;
    let budget = cfg.battery.budget;
    let milp = if cfg.battery.sites.is_empty() {
        if !budget.is_finite() {
            return Err(CliError::input("sizing the catalog needs a finite budget"));
        }
        let prices = prices_at(&lmps, &case.net, &catalog)?;
        build_schedule(&catalog, &prices, dt, budget, cfg.aus.variant)?
    } else {
        let (cands, caps) = cfg.battery.config().resolve(&catalog).map_err(CliError::input)?;
        let cands: Vec<BessCandidate> = cands.into_iter().cloned().collect();
        let prices = prices_at(&lmps, &case.net, &cands)?;
        build_fixed_schedule(&cands, &caps, &prices, dt, budget, cfg.aus.variant)?
    };
    let sol = solve_schedule(&milp)?;
    info!("schedule revenue {:.4}, investment {:.4}", sol.revenue(), sol.investment);
    write_schedule_csv(&cfg.out_dir.join("schedule.csv"), &sol)?;
    write_json(&cfg.out_dir.join("schedule.json"), &sol)?;
    Ok(ExitStatus::Ok)
}

#[derive(Serialize)]
struct AusReport<'a> {
    #[serde(flatten)]
    convergence: &'a ConvergenceReport,
    revenue: f64,
    investment: f64,
    system_cost: f64,
    base_system_cost: f64,
    clearing_violation: f64,
}

/// `trace.json`, `lmp.csv`, `schedule.csv` and `aus_report.json`; all are
/// written before a non-converged run reports exit status 3.
pub fn cmd_aus(cfg: &RunConfig) -> Result<ExitStatus, CliError> {
    let case = load(cfg)?;
    let catalog = catalog(cfg)?;
    let periods = day_range(cfg, &case.loads)?;
    let market = MarketCase { net: &case.net, ptdf: &case.ptdf, loads: &case.loads, catalog: &catalog };
    let config: BessConfig = cfg.battery.config();
    let out = run_aus(&market, &config, periods, &cfg.aus)?;
    let dir = &cfg.out_dir;
    let trace_path = dir.join("trace.json");
    write_trace_json(&trace_path, &out.trace).map_err(io_err(&trace_path))?;
    write_lmp_csv(&dir.join("lmp.csv"), &case.net, &out.lmps)?;
    write_schedule_csv(&dir.join("schedule.csv"), &out.schedule)?;
    let report = AusReport {
        convergence: &out.report,
        revenue: out.revenue(),
        investment: out.schedule.investment,
        system_cost: out.dispatch.total_cost,
        base_system_cost: out.base_dispatch.total_cost,
        clearing_violation: clearing_violation(&out, &case.net),
    };
    write_json(&dir.join("aus_report.json"), &report)?;
    if out.report.converged {
        Ok(ExitStatus::Ok)
    } else {
        eprintln!(
            "warning: prices did not settle after {} iterations (last change {:.3e})",
            out.report.iterations, out.report.final_delta
        );
        Ok(ExitStatus::NotConverged)
    }
}

#[derive(Serialize)]
struct BestReport<'a> {
    trial: usize,
    r: f64,
    config: &'a BessConfig,
}

/// `history.jsonl`, `summary.csv`, `timings.csv`, `best.json` and, with
/// `fixed_price`, `impact.json`.
pub fn cmd_search(cfg: &RunConfig, fixed_price: bool) -> Result<ExitStatus, CliError> {
    let case = load(cfg)?;
    let catalog = catalog(cfg)?;
    let s = &cfg.search;
    let space = SearchSpace::new(catalog.clone(), s.max_sites, s.capacity.clone(), s.budget)?;
    let evaluator =
        MarketEvaluator::new(case.net, case.ptdf, case.loads, catalog, cfg.horizon, cfg.aus, cfg.threads)?;
    let settings = SearchSettings { method: s.method, trials: s.trials, seed: cfg.seed, tpe: s.tpe };
    let history = run_search(&space, &evaluator, &settings, Some(evaluator.initial_scores()?))?;

    let dir = &cfg.out_dir;
    for (name, write) in [
        ("history.jsonl", write_history_jsonl as fn(&Path, _) -> std::io::Result<()>),
        ("summary.csv", write_summary_csv),
        ("timings.csv", write_timings_csv),
    ] {
        let path = dir.join(name);
        write(&path, &history).map_err(io_err(&path))?;
    }
    let Some(best) = history.best_trial() else {
        return Err(CliError::infeasible(format!("all {} trials failed", history.len())));
    };
    info!("best trial {}: R = {:.4}", best.index, best.r);
    write_json(&dir.join("best.json"), &BestReport { trial: best.index, r: best.r, config: &best.config })?;
    if fixed_price {
        let impact = evaluator.compare_lmp_impact(&best.config)?;
        write_json(&dir.join("impact.json"), &impact)?;
    }
    Ok(ExitStatus::Ok)
}
