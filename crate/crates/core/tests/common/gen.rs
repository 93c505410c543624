//! Random instance generators shared by the integration suites.
#![allow(dead_code)]

use bess_core::dispatch::{BatteryBid, BidSet};
use bess_core::network::{
    compute_ptdf, Bus, GeneratorSpec, LineSpec, LoadProfile, LoadSeries, PowerNetwork, PtdfMatrix,
};
use bess_core::scheduling::BessCandidate;
use rand::Rng;

pub struct Instance {
    pub net: PowerNetwork,
    pub ptdf: PtdfMatrix,
    pub loads: LoadProfile,
}

/// Connected network: a random spanning tree plus a few chords, distinct
/// generator costs, loads well inside total capacity.
pub fn network<R: Rng>(rng: &mut R, n: usize, periods: usize) -> Instance {
    let buses: Vec<Bus> = (1..=n as u32).map(|id| Bus { id, name: format!("b{id}") }).collect();
    let mut lines = Vec::new();
    for b in 2..=n as u32 {
        let parent = rng.random_range(1..b);
        lines.push((parent, b));
    }
    for _ in 0..rng.random_range(0..=n / 2) {
        let a = rng.random_range(1..=n as u32);
        let b = rng.random_range(1..=n as u32);
        if a != b && !lines.contains(&(a, b)) && !lines.contains(&(b, a)) {
            lines.push((a, b));
        }
    }
    let lines: Vec<LineSpec> = lines
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| LineSpec {
            id: i as u32 + 1,
            from_bus: a,
            to_bus: b,
            reactance: rng.random_range(0.05..0.5),
            flow_limit: rng.random_range(30.0..150.0),
        })
        .collect();
    let n_gens = rng.random_range(2..=n.max(2) + 1);
    let gens: Vec<GeneratorSpec> = (0..n_gens)
        .map(|g| GeneratorSpec {
            id: g as u32 + 1,
            bus: rng.random_range(1..=n as u32),
            marginal_cost: 5.0 + 10.0 * g as f64 + rng.random_range(0.0..9.0),
            p_min: 0.0,
            p_max: rng.random_range(80.0..250.0),
        })
        .collect();
    let cap: f64 = gens.iter().map(|g| g.p_max).sum();
    let net = PowerNetwork::new(buses, lines, gens, None).unwrap();
    let ptdf = compute_ptdf(&net).unwrap();
    let mut series = Vec::new();
    for bus in 1..=n as u32 {
        if rng.random_bool(0.7) {
            let values = (0..periods).map(|_| rng.random_range(0.0..0.5) * cap / n as f64).collect();
            series.push(LoadSeries { bus, values });
        }
    }
    Instance { net, ptdf, loads: LoadProfile::new(series) }
}

/// Random price-taking offers for `k` batteries at random buses.
pub fn bids<R: Rng>(rng: &mut R, net: &PowerNetwork, k: usize, periods: usize) -> BidSet {
    BidSet {
        bids: (0..k)
            .map(|i| BatteryBid {
                battery_id: i as u32 + 1,
                bus: net.buses[rng.random_range(0..net.buses.len())].id,
                charge_price: (0..periods).map(|_| -rng.random_range(1.0..40.0)).collect(),
                discharge_price: (0..periods).map(|_| rng.random_range(1.0..60.0)).collect(),
                charge_lower: vec![0.0; periods],
                charge_upper: (0..periods).map(|_| rng.random_range(0.0..20.0)).collect(),
                discharge_lower: vec![0.0; periods],
                discharge_upper: (0..periods).map(|_| rng.random_range(0.0..20.0)).collect(),
            })
            .collect(),
    }
}

pub fn candidate<R: Rng>(rng: &mut R, id: u32, bus: u32) -> BessCandidate {
    let sl = rng.random_range(0.0..0.2);
    BessCandidate {
        id,
        bus,
        fixed_cost: rng.random_range(0.0..60.0),
        unit_cost: rng.random_range(0.5..4.0),
        kappa_c: rng.random_range(0.2..0.6),
        kappa_d: rng.random_range(0.2..0.6),
        soc_min: sl,
        soc_max: rng.random_range(0.8..1.0),
        eta_c: rng.random_range(0.8..1.0),
        eta_d: rng.random_range(0.8..1.0),
        init_soc: Some(sl),
    }
}

/// `[candidate][t]` prices with a real intraday spread.
pub fn prices<R: Rng>(rng: &mut R, n: usize, periods: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..periods).map(|_| rng.random_range(5.0..80.0)).collect()).collect()
}
