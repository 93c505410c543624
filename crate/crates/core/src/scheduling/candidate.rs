use crate::network::case::Table;
use crate::network::{BusId, NetworkError};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A storage site the owner may build at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BessCandidate {
    pub id: u32,
    pub bus: BusId,
    /// $ per installation.
    pub fixed_cost: f64,
    /// $ per MWh of capacity.
    pub unit_cost: f64,
    /// MW of charge rate per MWh of capacity.
    pub kappa_c: f64,
    pub kappa_d: f64,
    /// SOC bounds as fractions of capacity.
    pub soc_min: f64,
    pub soc_max: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    /// Starting SOC fraction; `soc_min` when absent.
    pub init_soc: Option<f64>,
}

impl BessCandidate {
    pub fn initial_soc(&self) -> f64 {
        self.init_soc.unwrap_or(self.soc_min)
    }

    pub fn validate(&self) -> Result<(), String> {
        let id = self.id;
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(format!("candidate {id}: need 0 <= Sl < Su <= 1"));
        }
        if !(self.kappa_c > 0.0 && self.kappa_d > 0.0) || !self.kappa_c.is_finite() || !self.kappa_d.is_finite() {
            return Err(format!("candidate {id}: rate coefficients must be positive"));
        }
        if !(self.eta_c > 0.0 && self.eta_c <= 1.0 && self.eta_d > 0.0 && self.eta_d <= 1.0) {
            return Err(format!("candidate {id}: efficiencies must lie in (0, 1]"));
        }
        if !(self.fixed_cost >= 0.0 && self.unit_cost >= 0.0) || !self.fixed_cost.is_finite() || !self.unit_cost.is_finite() {
            return Err(format!("candidate {id}: costs must be finite and nonnegative"));
        }
        if let Some(s) = self.init_soc {
            if !(0.0..=1.0).contains(&s) {
                return Err(format!("candidate {id}: initial SOC must be a fraction"));
            }
        }
        Ok(())
    }

    /// Largest capacity affordable with `budget` alone, clipped at zero.
    pub fn capacity_cap(&self, budget: f64, ignore_fixed_cost: bool) -> f64 {
        let fixed = if ignore_fixed_cost { 0.0 } else { self.fixed_cost };
        if self.unit_cost > 0.0 {
            ((budget - fixed) / self.unit_cost).max(0.0)
        } else {
            f64::INFINITY
        }
    }
}

/// Installed capacity at one catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub candidate_id: u32,
    /// MWh
    pub capacity: f64,
}

/// A siting decision. Only sites with positive capacity count as installed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BessConfig {
    pub sites: Vec<Site>,
    pub budget: f64,
}

impl BessConfig {
    pub fn empty(budget: f64) -> Self {
        Self { sites: Vec::new(), budget }
    }

    pub fn installed(&self) -> impl Iterator<Item = &Site> {
        self.sites.iter().filter(|s| s.capacity > 0.0)
    }

    /// `sum F_i y_i + G_i c_i` over installed sites.
    pub fn investment(&self, catalog: &[BessCandidate]) -> Result<f64, String> {
        let mut total = 0.0;
        for s in self.installed() {
            let c = find(catalog, s.candidate_id)?;
            total += c.fixed_cost + c.unit_cost * s.capacity;
        }
        Ok(total)
    }

    /// Installed candidates and their capacities, in config order.
    pub fn resolve<'a>(&self, catalog: &'a [BessCandidate]) -> Result<(Vec<&'a BessCandidate>, Vec<f64>), String> {
        let mut cands = Vec::new();
        let mut caps = Vec::new();
        for s in self.installed() {
            if cands.iter().any(|c: &&BessCandidate| c.id == s.candidate_id) {
                return Err(format!("candidate {} listed twice", s.candidate_id));
            }
            cands.push(find(catalog, s.candidate_id)?);
            caps.push(s.capacity);
        }
        Ok((cands, caps))
    }
}

fn find(catalog: &[BessCandidate], id: u32) -> Result<&BessCandidate, String> {
    catalog.iter().find(|c| c.id == id).ok_or_else(|| format!("unknown candidate {id}"))
}

/// Reads a catalog with columns `id,bus_id,F,G,kc,kd,Sl,Su,etac,etad` and an
/// optional `init_soc`.
pub fn load_candidates(path: &Path) -> Result<Vec<BessCandidate>, NetworkError> {
    let t = Table::read(path)?;
    let names = ["id", "bus_id", "f", "g", "kc", "kd", "sl", "su", "etac", "etad"];
    let cols = names.map(|c| t.column(c)).into_iter().collect::<Result<Vec<_>, _>>()?;
    let c_init = t.optional_column("init_soc");
    let mut out: Vec<BessCandidate> = Vec::new();
    for row in t.rows() {
        let c = BessCandidate {
            id: row.parse(cols[0], "id")?,
            bus: row.parse(cols[1], "bus_id")?,
            fixed_cost: row.parse(cols[2], "F")?,
            unit_cost: row.parse(cols[3], "G")?,
            kappa_c: row.parse(cols[4], "kc")?,
            kappa_d: row.parse(cols[5], "kd")?,
            soc_min: row.parse(cols[6], "Sl")?,
            soc_max: row.parse(cols[7], "Su")?,
            eta_c: row.parse(cols[8], "etac")?,
            eta_d: row.parse(cols[9], "etad")?,
            init_soc: row.parse_opt(c_init, "init_soc")?,
        };
        c.validate().map_err(|m| row.error(m))?;
        if out.iter().any(|o| o.id == c.id) {
            return Err(row.error(format!("duplicate candidate id {}", c.id)));
        }
        out.push(c);
    }
    Ok(out)
}

/// Writes a catalog in the format read by [`load_candidates`].
pub fn write_candidates(path: &Path, catalog: &[BessCandidate]) -> Result<(), NetworkError> {
    let io = |source| NetworkError::Io { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(["id", "bus_id", "F", "G", "kc", "kd", "Sl", "Su", "etac", "etad", "init_soc"])
        .map_err(|e| io(e.into()))?;
    for c in catalog {
        let f = |v: f64| v.to_string();
        w.write_record([
            c.id.to_string(),
            c.bus.to_string(),
            f(c.fixed_cost),
            f(c.unit_cost),
            f(c.kappa_c),
            f(c.kappa_d),
            f(c.soc_min),
            f(c.soc_max),
            f(c.eta_c),
            f(c.eta_d),
            c.init_soc.map(f).unwrap_or_default(),
        ])
        .map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}
