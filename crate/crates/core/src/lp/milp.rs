//! Branch-and-bound over binary columns.
//!
//! Nodes are explored depth first, branching on the most fractional binary
//! and taking the child nearer its rounded value first. Whenever a dive ends
//! (integral, pruned or infeasible leaf) the next node is the open one with
//! the best bound.

use super::{solve_lp_with, LinearProgram, LpError, LpSolution, LpStatus, Tolerances};
use log::debug;

#[derive(Debug, Clone, PartialEq)]
pub struct MilpProblem {
    pub base: LinearProgram,
    pub binary_vars: Vec<usize>,
}

impl MilpProblem {
    pub fn validate(&self) -> Result<(), LpError> {
        self.base.validate()?;
        for &j in &self.binary_vars {
            let (lo, hi) = *self.base.var_bounds.get(j).ok_or(LpError::BadIndex(j))?;
            if lo < 0.0 || hi > 1.0 {
                return Err(LpError::Structure(format!(
                    "binary column {j} has bounds [{lo}, {hi}] outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpOptions {
    pub tolerances: Tolerances,
    pub node_limit: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            node_limit: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    /// Final LP with every binary fixed at its incumbent value; duals and
    /// reduced costs refer to that restriction.
    pub solution: LpSolution,
    /// Objective of the root relaxation, a lower bound on `solution`.
    pub relaxation_objective: f64,
    pub nodes: usize,
    /// The node limit cut the search short; `solution` is the best incumbent
    /// found, not a proven optimum.
    pub node_limit_reached: bool,
}

pub fn solve_milp(problem: &MilpProblem) -> Result<MilpSolution, LpError> {
    solve_milp_with(problem, &MilpOptions::default())
}

struct Node {
    bound: f64,
    fixings: Vec<(usize, f64)>,
}

pub fn solve_milp_with(problem: &MilpProblem, opts: &MilpOptions) -> Result<MilpSolution, LpError> {
    problem.validate()?;
    let tol = &opts.tolerances;
    let restricted = |fixings: &[(usize, f64)]| {
        let mut lp = problem.base.clone();
        for &(j, v) in fixings {
            lp.var_bounds[j] = (v, v);
        }
        lp
    };

    let root = solve_lp_with(&problem.base, tol)?;
    let mut nodes = 1;
    if root.status != LpStatus::Optimal {
        return Ok(MilpSolution {
            relaxation_objective: root.objective_value,
            solution: root,
            nodes,
            node_limit_reached: false,
        });
    }
    let relaxation_objective = root.objective_value;

    let mut incumbent: Option<(f64, Vec<(usize, f64)>)> = None;
    let mut open: Vec<Node> = Vec::new();
    let mut pending = Some((Vec::new(), root));
    let mut limit_hit = false;

    loop {
        if let Some((fixings, sol)) = pending.take() {
            let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v);
            if sol.status == LpStatus::Optimal && sol.objective_value < cutoff - tol.gap {
                match most_fractional(&problem.binary_vars, &sol.primal, tol.int) {
                    None => {
                        let fixed: Vec<(usize, f64)> = problem
                            .binary_vars
                            .iter()
                            .map(|&j| (j, sol.primal[j].round()))
                            .collect();
                        debug!("new incumbent {} at node {nodes}", sol.objective_value);
                        incumbent = Some((sol.objective_value, fixed));
                    }
                    Some(j) => {
                        let v = sol.primal[j];
                        let near = v.round();
                        let bound = sol.objective_value;
                        // Pushed last is explored first.
                        for val in [1.0 - near, near] {
                            let mut f = fixings.clone();
                            f.push((j, val));
                            open.push(Node { bound, fixings: f });
                        }
                        let next = open.pop().expect("just pushed");
                        pending = Some(dive(&restricted, next, tol, &mut nodes)?);
                        if nodes >= opts.node_limit {
                            limit_hit = true;
                            break;
                        }
                        continue;
                    }
                }
            }
        }
        // Dive ended: restart from the best open bound.
        let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v);
        open.retain(|n| n.bound < cutoff - tol.gap);
        let Some(best) = open
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.bound.total_cmp(&b.1.bound))
            .map(|(i, _)| i)
        else {
            break;
        };
        let node = open.swap_remove(best);
        pending = Some(dive(&restricted, node, tol, &mut nodes)?);
        if nodes >= opts.node_limit {
            limit_hit = true;
            break;
        }
    }
    if limit_hit {
        debug!("branch and bound stopped at node limit {}", opts.node_limit);
    }

    let solution = match incumbent {
        Some((_, fixings)) => {
            let lp = restricted(&fixings);
            let mut sol = solve_lp_with(&lp, tol)?;
            for &(j, v) in &fixings {
                if sol.status == LpStatus::Optimal {
                    sol.primal[j] = v;
                }
            }
            sol
        }
        None => LpSolution::without_point(LpStatus::Infeasible, 0),
    };
    Ok(MilpSolution {
        solution,
        relaxation_objective,
        nodes,
        node_limit_reached: limit_hit,
    })
}

fn dive(
    restricted: &impl Fn(&[(usize, f64)]) -> LinearProgram,
    node: Node,
    tol: &Tolerances,
    nodes: &mut usize,
) -> Result<(Vec<(usize, f64)>, LpSolution), LpError> {
    *nodes += 1;
    let sol = solve_lp_with(&restricted(&node.fixings), tol)?;
    Ok((node.fixings, sol))
}

fn most_fractional(binaries: &[usize], x: &[f64], int_tol: f64) -> Option<usize> {
    binaries
        .iter()
        .map(|&j| (j, (x[j] - x[j].round()).abs()))
        .filter(|&(_, f)| f > int_tol)
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(j, _)| j)
}
