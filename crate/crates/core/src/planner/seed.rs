use super::{PlannerError, SearchSpace};
use crate::scheduling::BessConfig;
use rand::Rng;

/// Draws one index with probability proportional to `weights`, or uniformly
/// when every weight is zero. Entries already `taken` are excluded.
pub(crate) fn weighted_pick<R: Rng + ?Sized>(weights: &[f64], taken: &[bool], rng: &mut R) -> Option<usize> {
    let open: Vec<usize> = (0..weights.len()).filter(|&i| !taken[i]).collect();
    if open.is_empty() {
        return None;
    }
    let total: f64 = open.iter().map(|&i| weights[i]).sum();
    if !(total > 0.0) {
        return Some(open[rng.random_range(0..open.len())]);
    }
    let mut u = rng.random::<f64>() * total;
    for &i in &open {
        if weights[i] <= 0.0 {
            continue;
        }
        if u < weights[i] {
            return Some(i);
        }
        u -= weights[i];
    }
    open.iter().rev().copied().find(|&i| weights[i] > 0.0)
}

/// `n` starting configurations. Their anchor sites are an ordered draw
/// without replacement with probability proportional to `scores` (one per
/// catalog entry); each configuration then adds up to `max_sites - 1` more
/// sites drawn the same way. Capacities are uniform within each site's
/// budget-implied cap, then repaired to fit the shared budget.
pub fn congestion_seed<R: Rng + ?Sized>(
    space: &SearchSpace,
    scores: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<Vec<BessConfig>, PlannerError> {
    let feasible = space.feasible_sites();
    if n > feasible.len() {
        return Err(PlannerError::Space(format!(
            "cannot seed {n} configurations from {} affordable sites",
            feasible.len()
        )));
    }
    if scores.len() != space.catalog.len() {
        return Err(PlannerError::Space("one congestion score per catalog entry".into()));
    }
    let weights: Vec<f64> = feasible.iter().map(|&i| scores[i].max(0.0)).collect();

    let mut taken = vec![false; feasible.len()];
    let mut anchors = Vec::with_capacity(n);
    for _ in 0..n {
        let j = weighted_pick(&weights, &taken, rng).expect("n <= feasible sites");
        taken[j] = true;
        anchors.push(j);
    }

    let max_k = space.max_sites.min(feasible.len());
    Ok(anchors
        .into_iter()
        .map(|a| {
            let k = rng.random_range(1..=max_k);
            let mut used = vec![false; feasible.len()];
            used[a] = true;
            let mut picks = vec![a];
            while picks.len() < k {
                let j = weighted_pick(&weights, &used, rng).expect("k <= feasible sites");
                used[j] = true;
                picks.push(j);
            }
            let pairs: Vec<(usize, f64)> = picks
                .into_iter()
                .map(|j| {
                    let i = feasible[j];
                    (i, space.sample_capacity(i, rng))
                })
                .collect();
            space.make_config(&pairs)
        })
        .collect())
}
