use super::search::{SearchHistory, Trial};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// One JSON object per trial, in trial order. Wall times are not written.
pub fn write_history_jsonl(path: &Path, history: &SearchHistory) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for t in &history.trials {
        serde_json::to_writer(&mut out, t).map_err(std::io::Error::other)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Replays a history file; the best-so-far index is recomputed.
pub fn read_history_jsonl(path: &Path) -> std::io::Result<SearchHistory> {
    let mut trials = Vec::new();
    for (n, line) in BufReader::new(std::fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Trial = serde_json::from_str(&line)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", n + 1)))?;
        trials.push(t);
    }
    Ok(SearchHistory::from_trials(trials))
}

/// `trial,R,sites,capacities`; lists are `;`-separated and `R` is empty for
/// failed trials.
pub fn write_summary_csv(path: &Path, history: &SearchHistory) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["trial", "R", "sites", "capacities"])?;
    for t in &history.trials {
        let r = if t.r.is_finite() { t.r.to_string() } else { String::new() };
        let sites = join(t.config.sites.iter().map(|s| s.candidate_id.to_string()));
        let caps = join(t.config.sites.iter().map(|s| s.capacity.to_string()));
        w.write_record([t.index.to_string(), r, sites, caps])?;
    }
    w.flush()
}

/// `trial,wall_time_s`, kept apart from the history so that file stays
/// reproducible.
pub fn write_timings_csv(path: &Path, history: &SearchHistory) -> std::io::Result<()> {
    let mut text = String::from("trial,wall_time_s\n");
    for t in &history.trials {
        let _ = writeln!(text, "{},{}", t.index, t.wall_time);
    }
    std::fs::write(path, text)
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(";")
}
