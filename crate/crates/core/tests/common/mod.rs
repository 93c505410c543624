#![allow(dead_code)]

use bess_core::network::{compute_ptdf, load_case, load_loads, LoadProfile, PowerNetwork, PtdfMatrix};
use bess_core::scheduling::{load_candidates, BessCandidate, BessConfig, Site};
use std::path::PathBuf;

pub struct Fixture {
    pub net: PowerNetwork,
    pub ptdf: PtdfMatrix,
    pub loads: LoadProfile,
    pub catalog: Vec<BessCandidate>,
}

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> Fixture {
    let dir = fixture_dir(name);
    let net = load_case(&dir).unwrap();
    let ptdf = compute_ptdf(&net).unwrap();
    let loads = load_loads(&dir.join("loads.csv"), &net).unwrap();
    let catalog = load_candidates(&dir.join("candidates.csv")).unwrap();
    Fixture { net, ptdf, loads, catalog }
}

/// The battery each shipped fixture is designed around.
pub fn fixture_battery(name: &str) -> BessConfig {
    let (id, capacity) = match name {
        "triangle-congested" => (2, 120.0),
        "pareto" => (1, 40.0),
        _ => (1, 1.0),
    };
    BessConfig { sites: vec![Site { candidate_id: id, capacity }], budget: 1e4 }
}

pub const FIXTURES: [&str; 4] = ["2bus-uncongested", "2bus-congested", "triangle-congested", "pareto"];
pub mod gen;
pub mod checks;
