use bess_core::dispatch::{read_congestion_csv, read_lmp_csv};
use bess_core::market::read_trace_json;
use bess_core::network::load_case;
use bess_core::planner::read_history_jsonl;
use bess_core::scheduling::read_schedule_csv;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn bess(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bess"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("BESS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn run(name: &str, args: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let out = bess(&fixture(name).join("bess.toml"), dir.path(), args);
    (out, dir)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn dispatch_writes_prices_for_every_bus_and_period() {
    let (o, dir) = run("2bus-congested", &["dispatch"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let net = load_case(&fixture("2bus-congested")).unwrap();
    let lmps = read_lmp_csv(&dir.path().join("lmp.csv"), &net).unwrap();
    assert_eq!(lmps.num_buses(), 2);
    assert_eq!(lmps.num_periods(), 24);
    assert!((lmps.at(0, 0) - 10.0).abs() < 1e-9 && (lmps.at(1, 0) - 30.0).abs() < 1e-9);
    let text = std::fs::read_to_string(dir.path().join("lmp.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 24);
    let score = read_congestion_csv(&dir.path().join("congestion.csv"), &net).unwrap();
    assert!(score.scores[1] > score.scores[0]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dispatch.json")).unwrap()).unwrap();
    assert!(json["total_cost"].as_f64().unwrap() > 0.0);
}

#[test]
fn ptdf_command_writes_matrix() {
    let (o, dir) = run("triangle-congested", &["ptdf"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("ptdf.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 3);
}

#[test]
fn missing_input_is_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bess"))
        .args(["--case", "/definitely/not/here", "--out"])
        .arg(dir.path())
        .arg("dispatch")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("buses.csv"));
}

#[test]
fn bad_arguments_are_exit_1() {
    let (o, _dir) = run("pareto", &["aus", "--site", "nonsense"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn demand_beyond_generation_is_exit_2() {
    let case = tempfile::tempdir().unwrap();
    for f in ["buses.csv", "lines.csv", "generators.csv"] {
        std::fs::copy(fixture("2bus-congested").join(f), case.path().join(f)).unwrap();
    }
    let loads = case.path().join("loads.csv");
    std::fs::write(&loads, "bus_id,period_index,load_mw\n2,0,100000\n").unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bess"))
        .arg("--case")
        .arg(case.path())
        .arg("--loads")
        .arg(&loads)
        .arg("--out")
        .arg(out.path())
        .args(["dispatch"])
        .env_remove("BESS_OUT_DIR")
        .output()
        .unwrap();
    // One period is shorter than the default 24-period day.
    assert_eq!(code(&o), 1);
    let cfg = case.path().join("bess.toml");
    std::fs::write(&cfg, "[horizon]\nday_length = 1\n").unwrap();
    let o = bess(&cfg, out.path(), &["dispatch"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn zero_capacity_battery_settles_immediately() {
    let (o, dir) = run("2bus-congested", &["aus", "--site", "1:0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = read_trace_json(&dir.path().join("trace.json")).unwrap();
    assert_eq!(trace.len(), 1);
    assert_eq!(trace[0].delta, 0.0);
}

#[test]
fn converged_run_shrinks_price_changes() {
    let (o, dir) = run("triangle-congested", &["aus"]);
    assert_eq!(code(&o), 0);
    let trace = read_trace_json(&dir.path().join("trace.json")).unwrap();
    assert!(trace.len() <= 5);
    assert!(trace.windows(2).all(|w| w[1].delta < w[0].delta));
    let sched = read_schedule_csv(&dir.path().join("schedule.csv")).unwrap();
    assert_eq!(sched.len(), 1);
    assert_eq!(sched[0].0, 2);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("aus_report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    assert!((report["revenue"].as_f64().unwrap() - 2280.0).abs() < 1e-6);
}

#[test]
fn iteration_cap_is_exit_3_with_outputs() {
    let (o, dir) = run("pareto", &["aus", "--epsilon", "0", "--max-iter", "2"]);
    assert_eq!(code(&o), 3);
    for f in ["trace.json", "lmp.csv", "schedule.csv", "aus_report.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn schedule_sizes_catalog_without_sites() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bess.toml");
    let case = fixture("triangle-congested");
    std::fs::write(
        &cfg,
        format!(
            "case_dir = {:?}\nloads = {:?}\ncandidates = {:?}\n[battery]\nbudget = 5000.0\n",
            case,
            case.join("loads.csv"),
            case.join("candidates.csv")
        ),
    )
    .unwrap();
    let o = bess(&cfg, dir.path(), &["schedule"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("schedule.json")).unwrap()).unwrap();
    assert_eq!(json["candidate_ids"].as_array().unwrap().len(), 3);
    assert!(json["investment"].as_f64().unwrap() <= 5000.0 + 1e-6);
}

#[test]
fn single_trial_search_writes_one_history_line() {
    let (o, dir) = run("2bus-congested", &["search", "--trials", "1"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("history.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 1);
    let history = read_history_jsonl(&dir.path().join("history.jsonl")).unwrap();
    assert_eq!(history.len(), 1);
    assert!(dir.path().join("best.json").exists());
    assert!(!dir.path().join("impact.json").exists());
}

#[test]
fn random_search_is_reproducible() {
    let args = ["--threads", "1", "search", "--method", "random", "--trials", "6"];
    let (a, da) = run("triangle-congested", &args);
    let (b, db) = run("triangle-congested", &args);
    assert_eq!((code(&a), code(&b)), (0, 0));
    for f in ["summary.csv", "history.jsonl"] {
        assert_eq!(std::fs::read(da.path().join(f)).unwrap(), std::fs::read(db.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn unaffordable_search_is_exit_2() {
    let (o, _dir) = run("pareto", &["search", "--budget", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn fixed_price_comparison_is_written() {
    let (o, dir) = run("triangle-congested", &["search", "--fixed-price"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("impact.json")).unwrap()).unwrap();
    assert!(v["r_fixed_price"].as_f64().unwrap() >= v["r_with_impact"].as_f64().unwrap() - 1e-6);
}

#[test]
fn out_dir_precedence() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let cfg = fixture("2bus-congested").join("bess.toml");
    let base = || {
        let mut c = Command::new(env!("CARGO_BIN_EXE_bess"));
        c.arg("--config").arg(&cfg).env("BESS_OUT_DIR", env_dir.path());
        c
    };
    assert_eq!(code(&base().arg("ptdf").output().unwrap()), 0);
    assert!(env_dir.path().join("ptdf.csv").exists());
    assert_eq!(code(&base().arg("--out").arg(flag_dir.path()).arg("ptdf").output().unwrap()), 0);
    assert!(flag_dir.path().join("ptdf.csv").exists());
}
