use super::{NetworkError, PowerNetwork};
use nalgebra::DMatrix;
use std::path::Path;

/// DC shift factors: entry `(l, b)` is the flow on line `l` (positive from
/// its `from` bus to its `to` bus) caused by injecting 1 MW at bus `b` and
/// withdrawing it at the slack bus. The slack column is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PtdfMatrix {
    values: DMatrix<f64>,
    pub slack: usize,
}

impl PtdfMatrix {
    pub fn get(&self, line: usize, bus: usize) -> f64 {
        self.values[(line, bus)]
    }

    pub fn num_lines(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_buses(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, line: usize) -> Vec<f64> {
        self.values.row(line).iter().copied().collect()
    }

    /// Line flows for a net injection vector (generation minus load per bus).
    /// Any imbalance is absorbed at the slack bus.
    pub fn flows(&self, injections: &[f64]) -> Vec<f64> {
        assert_eq!(injections.len(), self.num_buses());
        (0..self.num_lines())
            .map(|l| injections.iter().enumerate().map(|(b, p)| self.values[(l, b)] * p).sum())
            .collect()
    }

    /// Long-format export: `line_id,bus_id,factor`.
    pub fn write_csv(&self, net: &PowerNetwork, path: &Path) -> Result<(), NetworkError> {
        let io = |source| NetworkError::Io { path: path.to_path_buf(), source };
        let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
        w.write_record(["line_id", "bus_id", "factor"]).map_err(|e| io(e.into()))?;
        for (l, line) in net.lines.iter().enumerate() {
            for (b, bus) in net.buses.iter().enumerate() {
                w.write_record([line.id.to_string(), bus.id.to_string(), self.get(l, b).to_string()])
                    .map_err(|e| io(e.into()))?;
            }
        }
        w.flush().map_err(io)
    }
}

pub fn compute_ptdf(net: &PowerNetwork) -> Result<PtdfMatrix, NetworkError> {
    let n = net.num_buses();
    let s = net.slack;
    // Reduced index: bus b maps to b or b-1, slack dropped.
    let red = |b: usize| if b < s { Some(b) } else if b == s { None } else { Some(b - 1) };
    let mut bred = DMatrix::<f64>::zeros(n - 1, n - 1);
    for l in &net.lines {
        let y = 1.0 / l.reactance;
        let (f, t) = (red(l.from), red(l.to));
        if let Some(f) = f {
            bred[(f, f)] += y;
        }
        if let Some(t) = t {
            bred[(t, t)] += y;
        }
        if let (Some(f), Some(t)) = (f, t) {
            bred[(f, t)] -= y;
            bred[(t, f)] -= y;
        }
    }
    let x = if n > 1 {
        let singular = || NetworkError::Singular(net.buses.iter().map(|b| b.id).collect());
        let inv = bred.lu().try_inverse().ok_or_else(singular)?;
        if inv.iter().any(|v| !v.is_finite()) {
            return Err(singular());
        }
        inv
    } else {
        DMatrix::zeros(0, 0)
    };
    // Angle sensitivity of bus i to injection at bus b; zero at the slack.
    let theta = |i: usize, b: usize| match (red(i), red(b)) {
        (Some(i), Some(b)) => x[(i, b)],
        _ => 0.0,
    };
    let mut values = DMatrix::zeros(net.lines.len(), n);
    for (li, l) in net.lines.iter().enumerate() {
        for b in 0..n {
            values[(li, b)] = (theta(l.from, b) - theta(l.to, b)) / l.reactance;
        }
    }
    Ok(PtdfMatrix { values, slack: s })
}
