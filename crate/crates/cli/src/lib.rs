//! Front end for `bess-core`: argument parsing, configuration merging and
//! the subcommands behind the `bess` binary.
//!
//! Exit codes: 0 success, 1 input error, 2 infeasible (or every search
//! trial failed), 3 the alternating scheme hit its iteration cap.

// `!(x >= 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
pub mod config;

pub use commands::{cmd_aus, cmd_dispatch, cmd_ptdf, cmd_schedule, cmd_search};
pub use config::RunConfig;

use bess_core::dispatch::DispatchError;
use bess_core::market::MarketError;
use bess_core::network::NetworkError;
use bess_core::planner::{Method, PlannerError};
use bess_core::scheduling::{ScheduleError, Site};
use clap::{Args, Parser, Subcommand};
use std::fmt;
use std::path::PathBuf;

/// Environment variable overriding the output directory of the config file.
pub const OUT_DIR_ENV: &str = "BESS_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Input = 1,
    Infeasible = 2,
    NotConverged = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug)]
pub struct CliError {
    pub status: ExitStatus,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { status: ExitStatus::Input, message: message.into() }
    }

    pub fn infeasible(message: impl Into<String>) -> Self {
        Self { status: ExitStatus::Infeasible, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn dispatch_status(e: &DispatchError) -> ExitStatus {
    match e {
        DispatchError::Infeasible { .. } => ExitStatus::Infeasible,
        _ => ExitStatus::Input,
    }
}

fn schedule_status(e: &ScheduleError) -> ExitStatus {
    match e {
        ScheduleError::Infeasible | ScheduleError::InfeasibleByBudget { .. } => ExitStatus::Infeasible,
        _ => ExitStatus::Input,
    }
}

fn market_status(e: &MarketError) -> ExitStatus {
    match e {
        MarketError::Config(_) => ExitStatus::Input,
        MarketError::Dispatch { source, .. } => dispatch_status(source),
        MarketError::Schedule { source, .. } => schedule_status(source),
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<DispatchError> for CliError {
    fn from(e: DispatchError) -> Self {
        Self { status: dispatch_status(&e), message: e.to_string() }
    }
}

impl From<ScheduleError> for CliError {
    fn from(e: ScheduleError) -> Self {
        Self { status: schedule_status(&e), message: e.to_string() }
    }
}

impl From<MarketError> for CliError {
    fn from(e: MarketError) -> Self {
        Self { status: market_status(&e), message: e.to_string() }
    }
}

impl From<PlannerError> for CliError {
    fn from(e: PlannerError) -> Self {
        let status = match &e {
            PlannerError::Unaffordable { .. } => ExitStatus::Infeasible,
            PlannerError::Dispatch(d) => dispatch_status(d),
            PlannerError::Market(m) => market_status(m),
            _ => ExitStatus::Input,
        };
        Self { status, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "bess", version, about = "Battery siting and market simulation on DC networks")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory with buses.csv, lines.csv and generators.csv.
    #[arg(long, global = true)]
    pub case: Option<PathBuf>,
    #[arg(long, global = true)]
    pub loads: Option<PathBuf>,
    #[arg(long, global = true)]
    pub candidates: Option<PathBuf>,
    /// Output directory (overrides BESS_OUT_DIR and the config file).
    #[arg(short, long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 1 makes every output reproducible, 0 uses all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the shift-factor matrix.
    Ptdf,
    /// Storage-free dispatch of one day: prices and congestion scores.
    Dispatch {
        #[arg(long)]
        day: Option<usize>,
    },
    /// Battery schedule against one day's storage-free prices.
    Schedule {
        #[command(flatten)]
        battery: BatteryArgs,
        /// Ignore fixed costs and drop install decisions.
        #[arg(long)]
        zero_fixed_cost: bool,
        /// Forbid simultaneous charging and discharging.
        #[arg(long)]
        complementarity: bool,
    },
    /// Alternate dispatch and scheduling until prices settle.
    Aus {
        #[command(flatten)]
        battery: BatteryArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Relative bid margin.
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Search battery sites and sizes for the best discounted return.
    Search {
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        max_sites: Option<usize>,
        /// Also value the best configuration at storage-free prices.
        #[arg(long)]
        fixed_price: bool,
    },
}

#[derive(Debug, Args)]
pub struct BatteryArgs {
    #[arg(long)]
    pub day: Option<usize>,
    /// Battery as CANDIDATE_ID:CAPACITY_MWH; repeatable. Replaces the
    /// config's battery list. Without any, `schedule` sizes the whole
    /// catalog itself.
    #[arg(long = "site", value_parser = parse_site)]
    pub sites: Vec<Site>,
    #[arg(long)]
    pub budget: Option<f64>,
}

fn parse_site(s: &str) -> Result<Site, String> {
    let (id, cap) = s.split_once(':').ok_or("expected ID:CAPACITY")?;
    let candidate_id = id.trim().parse().map_err(|e| format!("candidate id {id:?}: {e}"))?;
    let capacity: f64 = cap.trim().parse().map_err(|e| format!("capacity {cap:?}: {e}"))?;
    if !(capacity >= 0.0) || !capacity.is_finite() {
        return Err(format!("capacity must be finite and nonnegative, got {capacity}"));
    }
    Ok(Site { candidate_id, capacity })
}

/// Config file, then `BESS_OUT_DIR`, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(CliError::input)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        cfg.out_dir = PathBuf::from(dir);
    }
    if let Some(p) = &cli.case {
        cfg.case_dir = p.clone();
    }
    if let Some(p) = &cli.loads {
        cfg.loads = p.clone();
    }
    if let Some(p) = &cli.candidates {
        cfg.candidates = p.clone();
    }
    if let Some(p) = &cli.out {
        cfg.out_dir = p.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Command::Ptdf => {}
        Command::Dispatch { day } => {
            if let Some(d) = day {
                cfg.day = *d;
            }
        }
        Command::Schedule { battery, zero_fixed_cost, complementarity } => {
            apply_battery(&mut cfg, battery);
            cfg.aus.variant.zero_fixed_cost |= zero_fixed_cost;
            cfg.aus.variant.enforce_complementarity |= complementarity;
        }
        Command::Aus { battery, epsilon, max_iter, margin } => {
            apply_battery(&mut cfg, battery);
            if let Some(e) = epsilon {
                cfg.aus.epsilon = *e;
            }
            if let Some(m) = max_iter {
                cfg.aus.max_iter = *m;
            }
            if let Some(m) = margin {
                cfg.aus.margin = *m;
            }
        }
        Command::Search { method, trials, budget, max_sites, .. } => {
            if let Some(m) = method {
                cfg.search.method = *m;
            }
            if let Some(t) = trials {
                cfg.search.trials = *t;
            }
            if let Some(b) = budget {
                cfg.search.budget = *b;
            }
            if let Some(m) = max_sites {
                cfg.search.max_sites = *m;
            }
        }
    }
    Ok(cfg)
}

fn apply_battery(cfg: &mut RunConfig, b: &BatteryArgs) {
    if let Some(d) = b.day {
        cfg.day = d;
    }
    if !b.sites.is_empty() {
        cfg.battery.sites = b.sites.clone();
    }
    if let Some(budget) = b.budget {
        cfg.battery.budget = budget;
    }
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> Result<ExitStatus, CliError> {
    let cfg = resolve_config(cli)?;
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::input(format!("output directory {}: {e}", cfg.out_dir.display())))?;
    match &cli.command {
        Command::Ptdf => cmd_ptdf(&cfg),
        Command::Dispatch { .. } => cmd_dispatch(&cfg),
        Command::Schedule { .. } => cmd_schedule(&cfg),
        Command::Aus { .. } => cmd_aus(&cfg),
        Command::Search { fixed_price, .. } => cmd_search(&cfg, *fixed_price),
    }
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn run_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Input.code() } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    // RUST_LOG, when set, refines the level chosen by -v.
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match run(&cli) {
        Ok(s) => s.code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.status.code()
        }
    }
}
