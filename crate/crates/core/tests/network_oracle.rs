mod common;

use bess_core::network::{compute_ptdf, PowerNetwork};
use common::gen;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Flows from angles solved with the Moore-Penrose inverse of the full
/// susceptance matrix; needs no slack choice.
fn pinv_flows(net: &PowerNetwork, injections: &[f64]) -> Vec<f64> {
    let n = net.num_buses();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for l in &net.lines {
        let y = 1.0 / l.reactance;
        b[(l.from, l.from)] += y;
        b[(l.to, l.to)] += y;
        b[(l.from, l.to)] -= y;
        b[(l.to, l.from)] -= y;
    }
    let theta = b.pseudo_inverse(1e-10).unwrap() * DMatrix::from_column_slice(n, 1, injections);
    net.lines.iter().map(|l| (theta[l.from] - theta[l.to]) / l.reactance).collect()
}

fn balanced(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    use rand::Rng;
    let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
    let mean = p.iter().sum::<f64>() / n as f64;
    p.iter_mut().for_each(|v| *v -= mean);
    p
}

#[test]
fn shift_factors_reproduce_pseudo_inverse_flows() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 2..=10 {
        let inst = gen::network(&mut rng, n, 1);
        let p = balanced(&mut rng, n);
        let want = pinv_flows(&inst.net, &p);
        let got = inst.ptdf.flows(&p);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-8, "n={n}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn slack_choice_does_not_change_balanced_flows() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 3..=8 {
        let inst = gen::network(&mut rng, n, 1);
        let p = balanced(&mut rng, n);
        let base = inst.ptdf.flows(&p);
        for slack in &inst.net.buses {
            let other = compute_ptdf(&inst.net.with_slack(slack.id).unwrap()).unwrap();
            for (a, b) in other.flows(&p).iter().zip(&base) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn slack_column_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let inst = gen::network(&mut rng, 6, 1);
    for l in 0..inst.ptdf.num_lines() {
        assert_eq!(inst.ptdf.get(l, inst.ptdf.slack), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flows_superpose(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = gen::network(&mut rng, n, 1);
        let a = balanced(&mut rng, n);
        let b = balanced(&mut rng, n);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let (fa, fb, fs) = (inst.ptdf.flows(&a), inst.ptdf.flows(&b), inst.ptdf.flows(&sum));
        for l in 0..fs.len() {
            prop_assert!((fs[l] - fa[l] - fb[l]).abs() < 1e-8);
        }
    }

    #[test]
    fn radial_lines_carry_subtree_injection(seed in any::<u64>(), n in 2usize..8) {
        // A tree has a unique flow pattern, so the factor of every line is
        // 0 or +-1.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = gen::network(&mut rng, n, 1);
        prop_assume!(inst.net.lines.len() == n - 1);
        for l in 0..inst.ptdf.num_lines() {
            for b in 0..n {
                let f = inst.ptdf.get(l, b);
                prop_assert!(f.abs() < 1e-9 || (f.abs() - 1.0).abs() < 1e-9, "{f}");
            }
        }
    }
}
