//! TOML run configuration. Relative paths resolve against the directory of
//! the file they were read from.

use bess_core::market::AusParams;
use bess_core::planner::{CapacitySpace, HorizonSpec, Method, TpeParams};
use bess_core::scheduling::{BessConfig, Site};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory holding `buses.csv`, `lines.csv` and `generators.csv`.
    pub case_dir: PathBuf,
    pub loads: PathBuf,
    pub candidates: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Worker threads for per-day simulation; 0 uses every core.
    pub threads: usize,
    /// Day simulated by the single-day commands.
    pub day: usize,
    pub battery: BatteryConfig,
    pub aus: AusParams,
    pub horizon: HorizonSpec,
    pub search: SearchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case_dir: PathBuf::from("."),
            loads: PathBuf::from("loads.csv"),
            candidates: PathBuf::from("candidates.csv"),
            out_dir: PathBuf::from("out"),
            seed: 0,
            threads: 0,
            day: 0,
            battery: BatteryConfig::default(),
            aus: AusParams::default(),
            horizon: HorizonSpec::default(),
            search: SearchConfig::default(),
        }
    }
}

/// Batteries used by `schedule` and `aus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryConfig {
    pub sites: Vec<Site>,
    pub budget: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self { sites: Vec::new(), budget: 1e6 }
    }
}

impl BatteryConfig {
    pub fn config(&self) -> BessConfig {
        BessConfig { sites: self.sites.clone(), budget: self.budget }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub method: Method,
    pub trials: usize,
    pub max_sites: usize,
    pub budget: f64,
    pub capacity: CapacitySpace,
    pub tpe: TpeParams,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            method: Method::Tpe,
            trials: 30,
            max_sites: 1,
            budget: 1e6,
            capacity: CapacitySpace::Range { min: 1.0, max: 100.0 },
            tpe: TpeParams::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads `path` and resolves its relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.rebase(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn rebase(&mut self, base: &Path) {
        for p in [&mut self.case_dir, &mut self.loads, &mut self.candidates, &mut self.out_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }
}
