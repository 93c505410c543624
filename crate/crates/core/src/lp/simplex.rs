//! Bounded-variable primal revised simplex with an explicit dense inverse.
//!
//! Rows are turned into equalities with one logical column each,
//! `A x - s = 0` with `s` carrying the row bounds, so every constraint of the
//! internal problem is a box. Phase 1 minimizes the sum of artificials added
//! for rows whose starting activity violates its bounds.

use super::{Basis, Column, LinearProgram, LpError, LpSolution, LpStatus, Tolerances, VarStatus};
use log::trace;

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 40;
const STALL_LIMIT: usize = 30;

/// Solves `lp` with default tolerances.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(lp, &Tolerances::default())
}

pub fn solve_lp_with(lp: &LinearProgram, tol: &Tolerances) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut s = Simplex::new(lp);
    let mut total = 0;

    if !s.artificials.is_empty() {
        let mut phase1 = vec![0.0; s.cols.len()];
        for &k in &s.artificials {
            phase1[k] = 1.0;
        }
        s.cost = phase1;
        match s.run()? {
            Outcome::Optimal => {}
            Outcome::Unbounded => unreachable!("phase 1 objective is bounded below by zero"),
        }
        total += s.iterations;
        s.refactor()?;
        let infeasibility: f64 = s.artificials.iter().map(|&k| s.x[k].abs()).sum();
        let scale = lp
            .row_kinds
            .iter()
            .map(|k| {
                let (lo, hi) = k.bounds();
                let lo = if lo.is_finite() { lo.abs() } else { 0.0 };
                let hi = if hi.is_finite() { hi.abs() } else { 0.0 };
                lo.max(hi)
            })
            .fold(1.0, f64::max);
        trace!("phase 1 finished: infeasibility {infeasibility:e} after {total} iterations");
        if infeasibility > tol.feas * scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, total));
        }
        for &k in &s.artificials {
            s.lower[k] = 0.0;
            s.upper[k] = 0.0;
            if s.status[k] != VarStatus::Basic {
                s.status[k] = VarStatus::AtLower;
                s.x[k] = 0.0;
            }
        }
        s.iterations = 0;
    }

    let mut cost = lp.objective.clone();
    cost.resize(s.cols.len(), 0.0);
    s.cost = cost;
    let outcome = s.run()?;
    total += s.iterations;
    if outcome == Outcome::Unbounded {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, total));
    }
    s.refactor()?;
    Ok(s.extract(lp, tol, total))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

struct Simplex {
    m: usize,
    n: usize,
    /// Columns of `[A  -I  artificials]`, sparse.
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    /// `basic[r]` is the column occupying basis position `r`.
    basic: Vec<usize>,
    artificials: Vec<usize>,
    /// Row-major dense `B^-1`.
    binv: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
}

impl Simplex {
    fn new(lp: &LinearProgram) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in row {
                cols[j].push((i, a));
            }
        }
        let mut lower: Vec<f64> = lp.var_bounds.iter().map(|b| b.0).collect();
        let mut upper: Vec<f64> = lp.var_bounds.iter().map(|b| b.1).collect();
        let mut x = Vec::with_capacity(n + m);
        let mut status = Vec::with_capacity(n + m);
        for j in 0..n {
            let (lo, hi) = (lower[j], upper[j]);
            if lo.is_finite() {
                x.push(lo);
                status.push(VarStatus::AtLower);
            } else if hi.is_finite() {
                x.push(hi);
                status.push(VarStatus::AtUpper);
            } else {
                x.push(0.0);
                status.push(VarStatus::Free);
            }
        }
        let activity = lp.row_activity(&x[..n]);

        let mut basic = vec![0; m];
        let mut artificials = Vec::new();
        let mut extra_cols = Vec::new();
        for i in 0..m {
            let (lo, hi) = lp.row_kinds[i].bounds();
            cols.push(vec![(i, -1.0)]);
            lower.push(lo);
            upper.push(hi);
            let k = n + i;
            let a = activity[i];
            if a >= lo && a <= hi {
                x.push(a);
                status.push(VarStatus::Basic);
                basic[i] = k;
            } else {
                let (bound, st) = if a < lo {
                    (lo, VarStatus::AtLower)
                } else {
                    (hi, VarStatus::AtUpper)
                };
                x.push(bound);
                status.push(st);
                // a - s + sign * art = 0 with art >= 0
                let r = a - bound;
                let sign = -r.signum();
                extra_cols.push((i, sign, r.abs()));
            }
        }
        for (i, sign, value) in extra_cols {
            let k = cols.len();
            cols.push(vec![(i, sign)]);
            lower.push(0.0);
            upper.push(f64::INFINITY);
            x.push(value);
            status.push(VarStatus::Basic);
            basic[i] = k;
            artificials.push(k);
        }

        let total = cols.len();
        let mut s = Self {
            m,
            n,
            cols,
            lower,
            upper,
            cost: vec![0.0; total],
            x,
            status,
            basic,
            artificials,
            binv: vec![0.0; m * m],
            since_refactor: 0,
            iterations: 0,
            max_iterations: 10_000usize.max(50 * (m + total)),
        };
        // Starting basis is diagonal.
        for r in 0..m {
            let (_, a) = s.cols[s.basic[r]][0];
            s.binv[r * m + r] = 1.0 / a;
        }
        s
    }

    /// Inverts the basis from scratch and recomputes basic values.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        let mut b = vec![0.0; m * m];
        for (r, &k) in self.basic.iter().enumerate() {
            for &(i, a) in &self.cols[k] {
                b[i * m + r] = a;
            }
        }
        self.binv = invert(&mut b, m).ok_or(LpError::SingularBasis)?;

        let mut rhs = vec![0.0; m];
        for (k, col) in self.cols.iter().enumerate() {
            if self.status[k] != VarStatus::Basic && self.x[k] != 0.0 {
                for &(i, a) in col {
                    rhs[i] -= a * self.x[k];
                }
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            self.x[self.basic[r]] = row.iter().zip(&rhs).map(|(p, q)| p * q).sum();
        }
        Ok(())
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for r in 0..m {
            let cb = self.cost[self.basic[r]];
            if cb != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yi, b) in y.iter_mut().zip(row) {
                    *yi += cb * b;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, k: usize, y: &[f64]) -> f64 {
        self.cost[k] - self.cols[k].iter().map(|&(i, a)| y[i] * a).sum::<f64>()
    }

    fn ftran(&self, k: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(i, a) in &self.cols[k] {
            for (r, al) in alpha.iter_mut().enumerate() {
                *al += self.binv[r * m + i] * a;
            }
        }
        alpha
    }

    fn run(&mut self) -> Result<Outcome, LpError> {
        let mut stall = 0;
        let mut bland = false;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.iterations));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.duals();

            // Pricing.
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for k in 0..self.cols.len() {
                let st = self.status[k];
                if st == VarStatus::Basic || self.lower[k] == self.upper[k] {
                    continue;
                }
                let d = self.reduced_cost(k, &y);
                let gain = match st {
                    VarStatus::AtLower if d < -DUAL_TOL => -d,
                    VarStatus::AtUpper if d > DUAL_TOL => d,
                    VarStatus::Free if d.abs() > DUAL_TOL => d.abs(),
                    _ => continue,
                };
                if bland {
                    entering = Some((k, d));
                    break;
                }
                if gain > best {
                    best = gain;
                    entering = Some((k, d));
                }
            }
            let Some((q, dq)) = entering else {
                return Ok(Outcome::Optimal);
            };
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);

            // Ratio test. Basic r moves at rate -dir * alpha[r] per unit step.
            let mut theta = self.upper[q] - self.lower[q];
            let mut leaving: Option<usize> = None;
            let mut leaving_pivot = 0.0;
            for (r, &al) in alpha.iter().enumerate() {
                if al.abs() < PIVOT_TOL {
                    continue;
                }
                let j = self.basic[r];
                let rate = -dir * al;
                let limit = if rate < 0.0 {
                    if self.lower[j].is_finite() {
                        (self.x[j] - self.lower[j]) / -rate
                    } else {
                        continue;
                    }
                } else if self.upper[j].is_finite() {
                    (self.upper[j] - self.x[j]) / rate
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                let better = match leaving {
                    _ if limit < theta - 1e-12 => true,
                    Some(cur) if limit <= theta + 1e-12 => {
                        if bland {
                            j < self.basic[cur]
                        } else {
                            al.abs() > leaving_pivot
                        }
                    }
                    None if limit <= theta + 1e-12 && theta.is_infinite() => true,
                    _ => false,
                };
                if better {
                    theta = limit;
                    leaving = Some(r);
                    leaving_pivot = al.abs();
                }
            }
            if theta.is_infinite() {
                return Ok(Outcome::Unbounded);
            }

            self.iterations += 1;
            if theta < 1e-12 {
                stall += 1;
                if stall > STALL_LIMIT {
                    bland = true;
                }
            } else {
                stall = 0;
                bland = false;
            }

            for (r, &al) in alpha.iter().enumerate() {
                if al != 0.0 {
                    let j = self.basic[r];
                    self.x[j] -= dir * al * theta;
                }
            }
            self.x[q] += dir * theta;

            match leaving {
                None => {
                    // Bound flip; the basis is unchanged.
                    if dir > 0.0 {
                        self.x[q] = self.upper[q];
                        self.status[q] = VarStatus::AtUpper;
                    } else {
                        self.x[q] = self.lower[q];
                        self.status[q] = VarStatus::AtLower;
                    }
                }
                Some(r) => {
                    let j = self.basic[r];
                    let rate = -dir * alpha[r];
                    if rate < 0.0 {
                        self.x[j] = self.lower[j];
                        self.status[j] = VarStatus::AtLower;
                    } else {
                        self.x[j] = self.upper[j];
                        self.status[j] = VarStatus::AtUpper;
                    }
                    self.pivot(r, &alpha);
                    self.basic[r] = q;
                    self.status[q] = VarStatus::Basic;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let inv = 1.0 / alpha[r];
        for v in &mut self.binv[r * m..(r + 1) * m] {
            *v *= inv;
        }
        let (head, rest) = self.binv.split_at_mut(r * m);
        let (prow, tail) = rest.split_at_mut(m);
        for (i, &al) in alpha.iter().enumerate() {
            if i == r || al == 0.0 {
                continue;
            }
            let target = if i < r {
                &mut head[i * m..(i + 1) * m]
            } else {
                let off = (i - r - 1) * m;
                &mut tail[off..off + m]
            };
            for (t, p) in target.iter_mut().zip(prow.iter()) {
                *t -= al * p;
            }
        }
        self.since_refactor += 1;
    }

    fn extract(&self, lp: &LinearProgram, tol: &Tolerances, iterations: usize) -> LpSolution {
        let n = self.n;
        let y = self.duals();
        let primal: Vec<f64> = self.x[..n].to_vec();
        let reduced_costs: Vec<f64> = (0..n)
            .map(|j| {
                if self.status[j] == VarStatus::Basic {
                    0.0
                } else {
                    self.reduced_cost(j, &y)
                }
            })
            .collect();
        let degenerate = self.basic.iter().any(|&k| {
            if self.artificials.contains(&k) {
                return true;
            }
            let v = self.x[k];
            let near = |b: f64| b.is_finite() && (v - b).abs() <= tol.feas * b.abs().max(1.0);
            near(self.lower[k]) || near(self.upper[k])
        });
        let basis = Basis {
            basic: self
                .basic
                .iter()
                .map(|&k| {
                    if k < n {
                        Column::Structural(k)
                    } else if k < n + self.m {
                        Column::Logical(k - n)
                    } else {
                        let (i, a) = self.cols[k][0];
                        Column::Artificial(i, a)
                    }
                })
                .collect(),
            structural: self.status[..n].to_vec(),
            logical: self.status[n..n + self.m].to_vec(),
        };
        LpSolution {
            status: LpStatus::Optimal,
            objective_value: lp.objective_value(&primal),
            primal,
            row_duals: y,
            reduced_costs,
            degenerate,
            iterations,
            basis: Some(basis),
        }
    }
}

/// Gauss-Jordan inverse with partial pivoting; `a` is row-major and consumed.
pub(crate) fn invert(a: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for c in 0..m {
        let (p, pv) = (c..m)
            .map(|r| (r, a[r * m + c].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if pv < 1e-12 {
            return None;
        }
        if p != c {
            for k in 0..m {
                a.swap(p * m + k, c * m + k);
                inv.swap(p * m + k, c * m + k);
            }
        }
        let d = 1.0 / a[c * m + c];
        for k in 0..m {
            a[c * m + k] *= d;
            inv[c * m + k] *= d;
        }
        for r in 0..m {
            if r == c {
                continue;
            }
            let f = a[r * m + c];
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                a[r * m + k] -= f * a[c * m + k];
                inv[r * m + k] -= f * inv[c * m + k];
            }
        }
    }
    Some(inv)
}
