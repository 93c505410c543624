use serde::{Deserialize, Serialize};
use std::path::Path;

/// One price comparison of an alternating run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub k: usize,
    /// L2 change of all prices against the previous iteration.
    pub delta: f64,
    /// System cost of this iteration's dispatch.
    pub f: f64,
    /// Battery net energy payment at this iteration's prices.
    pub g: f64,
    /// Mean price per bus, in bus-id order.
    pub lmp_mean: Vec<f64>,
}

pub fn write_trace_json(path: &Path, trace: &[TraceEntry]) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(trace).map_err(std::io::Error::other)?;
    std::fs::write(path, text + "\n")
}

pub fn read_trace_json(path: &Path) -> std::io::Result<Vec<TraceEntry>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(std::io::Error::other)
}
