//! Transmission network model, case-file ingestion and shift factors.

pub(crate) mod case;
mod ptdf;

pub use case::{load_case, load_loads, write_loads};
pub use ptdf::{compute_ptdf, PtdfMatrix};

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use thiserror::Error;

pub type BusId = u32;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("{file} line {line}: {msg}")]
    Parse { file: String, line: u64, msg: String },
    #[error("{file} line {line}: unknown bus {bus}")]
    UnknownBus { file: String, line: u64, bus: BusId },
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("network is disconnected; buses {0:?} are not reachable from the slack bus")]
    Disconnected(Vec<BusId>),
    #[error("reduced susceptance matrix is singular; check component containing buses {0:?}")]
    Singular(Vec<BusId>),
    #[error("load series horizons disagree: {0}")]
    HorizonMismatch(String),
    #[error("load series references unknown bus {0}")]
    LoadAtUnknownBus(BusId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub name: String,
}

/// Branch between two buses, stored with dense bus indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: u32,
    pub from: usize,
    pub to: usize,
    /// Per-unit series reactance.
    pub reactance: f64,
    /// Thermal limit in MW, applied in both directions.
    pub flow_limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: u32,
    pub bus: usize,
    /// $/MWh
    pub marginal_cost: f64,
    pub p_min: f64,
    pub p_max: f64,
}

/// Line description referring to external bus ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSpec {
    pub id: u32,
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub reactance: f64,
    pub flow_limit: f64,
}

/// Generator description referring to an external bus id.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub id: u32,
    pub bus: BusId,
    pub marginal_cost: f64,
    pub p_min: f64,
    pub p_max: f64,
}

/// Buses are kept sorted by id; `bus_index` maps ids to positions.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetwork {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub slack: usize,
    bus_index: HashMap<BusId, usize>,
}

impl PowerNetwork {
    /// Validates and assembles a network. Without an explicit slack the
    /// lowest-id bus hosting a generator is used (lowest-id bus if there
    /// are no generators).
    pub fn new(
        mut buses: Vec<Bus>,
        lines: Vec<LineSpec>,
        generators: Vec<GeneratorSpec>,
        slack: Option<BusId>,
    ) -> Result<Self, NetworkError> {
        if buses.is_empty() {
            return Err(NetworkError::Invalid("no buses".into()));
        }
        buses.sort_by_key(|b| b.id);
        let mut bus_index = HashMap::with_capacity(buses.len());
        for (i, b) in buses.iter().enumerate() {
            if bus_index.insert(b.id, i).is_some() {
                return Err(NetworkError::Invalid(format!("duplicate bus id {}", b.id)));
            }
        }
        let idx = |id: BusId| {
            bus_index
                .get(&id)
                .copied()
                .ok_or_else(|| NetworkError::Invalid(format!("unknown bus {id}")))
        };

        let mut out_lines = Vec::with_capacity(lines.len());
        for l in lines {
            if l.from_bus == l.to_bus {
                return Err(NetworkError::Invalid(format!("line {} connects bus {} to itself", l.id, l.from_bus)));
            }
            if !(l.reactance > 0.0) {
                return Err(NetworkError::Invalid(format!("line {} has nonpositive reactance {}", l.id, l.reactance)));
            }
            if !(l.flow_limit > 0.0) {
                return Err(NetworkError::Invalid(format!("line {} has nonpositive flow limit {}", l.id, l.flow_limit)));
            }
            out_lines.push(Line {
                id: l.id,
                from: idx(l.from_bus)?,
                to: idx(l.to_bus)?,
                reactance: l.reactance,
                flow_limit: l.flow_limit,
            });
        }

        let mut out_gens = Vec::with_capacity(generators.len());
        for g in generators {
            if !(g.p_min >= 0.0 && g.p_min <= g.p_max) || !g.marginal_cost.is_finite() {
                return Err(NetworkError::Invalid(format!(
                    "generator {} needs 0 <= p_min <= p_max and a finite cost",
                    g.id
                )));
            }
            out_gens.push(Generator {
                id: g.id,
                bus: idx(g.bus)?,
                marginal_cost: g.marginal_cost,
                p_min: g.p_min,
                p_max: g.p_max,
            });
        }

        let slack = match slack {
            Some(id) => idx(id)?,
            None => out_gens.iter().map(|g| g.bus).min().unwrap_or(0),
        };

        let net = Self {
            buses,
            lines: out_lines,
            generators: out_gens,
            slack,
            bus_index,
        };
        net.check_connected()?;
        Ok(net)
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    /// Same network with a different reference bus.
    pub fn with_slack(&self, id: BusId) -> Result<Self, NetworkError> {
        let slack = self.bus_index(id).ok_or(NetworkError::LoadAtUnknownBus(id))?;
        Ok(Self { slack, ..self.clone() })
    }

    fn check_connected(&self) -> Result<(), NetworkError> {
        let n = self.num_buses();
        let mut adj = vec![Vec::new(); n];
        for l in &self.lines {
            adj[l.from].push(l.to);
            adj[l.to].push(l.from);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![self.slack];
        seen[self.slack] = true;
        while let Some(b) = stack.pop() {
            for &nb in &adj[b] {
                if !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        let unreached: Vec<BusId> = (0..n).filter(|&b| !seen[b]).map(|b| self.buses[b].id).collect();
        if unreached.is_empty() {
            Ok(())
        } else {
            Err(NetworkError::Disconnected(unreached))
        }
    }
}

/// Load at one bus over the horizon, MW per period.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSeries {
    pub bus: BusId,
    pub values: Vec<f64>,
}

/// Bus load series sharing a horizon and a period length.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    pub series: Vec<LoadSeries>,
    /// Hours per period.
    pub period_hours: f64,
}

impl LoadProfile {
    pub fn new(series: Vec<LoadSeries>) -> Self {
        Self { series, period_hours: 1.0 }
    }

    pub fn horizon(&self) -> usize {
        self.series.first().map_or(0, |s| s.values.len())
    }

    /// Dense `bus x period` load matrix for periods `start..end`.
    pub fn bus_loads(&self, net: &PowerNetwork, start: usize, end: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; end - start]; net.num_buses()];
        for s in &self.series {
            if let Some(b) = net.bus_index(s.bus) {
                for (t, v) in s.values[start..end].iter().enumerate() {
                    out[b][t] += v;
                }
            }
        }
        out
    }

    /// Periods `start..end` as a standalone profile.
    pub fn window(&self, start: usize, end: usize) -> Self {
        Self {
            series: self
                .series
                .iter()
                .map(|s| LoadSeries { bus: s.bus, values: s.values[start..end].to_vec() })
                .collect(),
            period_hours: self.period_hours,
        }
    }

    /// Adds `mw` to bus `bus` in period `t`, creating the series if needed.
    pub fn add_load(&mut self, bus: BusId, t: usize, mw: f64) {
        let horizon = self.horizon();
        match self.series.iter_mut().find(|s| s.bus == bus) {
            Some(s) => s.values[t] += mw,
            None => {
                let mut values = vec![0.0; horizon];
                values[t] = mw;
                self.series.push(LoadSeries { bus, values });
            }
        }
    }
}

/// Checks every series against the network and returns the common horizon.
pub fn validate_series(net: &PowerNetwork, loads: &[LoadSeries]) -> Result<usize, NetworkError> {
    for s in loads {
        if net.bus_index(s.bus).is_none() {
            return Err(NetworkError::LoadAtUnknownBus(s.bus));
        }
        if let Some(v) = s.values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(NetworkError::Invalid(format!("bus {} has invalid load {v}", s.bus)));
        }
    }
    let mut lengths: BTreeMap<usize, Vec<BusId>> = BTreeMap::new();
    for s in loads {
        lengths.entry(s.values.len()).or_default().push(s.bus);
    }
    match lengths.len() {
        0 => Ok(0),
        1 => Ok(*lengths.keys().next().unwrap()),
        _ => Err(NetworkError::HorizonMismatch(
            lengths
                .iter()
                .map(|(len, buses)| format!("{len} periods at buses {buses:?}"))
                .collect::<Vec<_>>()
                .join("; "),
        )),
    }
}
