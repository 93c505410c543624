//! Shared setup for the benchmarks: the shipped fixtures, loaded once.

use bess_core::network::{compute_ptdf, load_case, load_loads, LoadProfile, PowerNetwork, PtdfMatrix};
use bess_core::scheduling::{load_candidates, BessCandidate};
use std::path::PathBuf;

pub struct Fixture {
    pub net: PowerNetwork,
    pub ptdf: PtdfMatrix,
    pub loads: LoadProfile,
    pub catalog: Vec<BessCandidate>,
}

/// Loads `fixtures/<name>` from the workspace root; panics on bad input.
pub fn fixture(name: &str) -> Fixture {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    let net = load_case(&dir).expect("fixture network");
    let ptdf = compute_ptdf(&net).expect("fixture ptdf");
    let loads = load_loads(&dir.join("loads.csv"), &net).expect("fixture loads");
    let catalog = load_candidates(&dir.join("candidates.csv")).expect("fixture candidates");
    Fixture { net, ptdf, loads, catalog }
}
