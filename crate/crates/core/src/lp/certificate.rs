//! Optimality certificate for a reported LP solution, recomputed from the
//! problem data alone.

use super::{LinearProgram, LpSolution, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Largest bound violation over rows and variables.
    pub primal_residual: f64,
    /// Largest wrong-signed dual or reduced cost.
    pub dual_residual: f64,
    /// Largest `|multiplier * distance to its bound|`.
    pub complementarity: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

impl CertificateReport {
    pub fn gap(&self) -> f64 {
        (self.primal_objective - self.dual_objective).abs()
    }

    /// Applies the stated tolerances. Feasibility is scaled by the size of the
    /// bound it is measured against.
    pub fn passes(&self, tol: &Tolerances) -> bool {
        self.primal_residual <= tol.feas
            && self.dual_residual <= tol.comp
            && self.complementarity <= tol.comp
            && self.gap() <= tol.gap * self.primal_objective.abs().max(1.0)
    }
}

/// Checks primal feasibility, dual sign feasibility, complementary slackness
/// and the primal/dual objective gap of `sol` against `lp`.
///
/// Reduced costs are recomputed as `c - A^T y` from the reported row duals
/// instead of trusting `sol.reduced_costs`.
pub fn check_certificate(lp: &LinearProgram, sol: &LpSolution) -> CertificateReport {
    let x = &sol.primal;
    let y = &sol.row_duals;
    let activity = lp.row_activity(x);

    let mut primal_residual: f64 = 0.0;
    let mut dual_residual: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    let mut dual_objective = 0.0;

    let mut account = |value: f64, lo: f64, hi: f64, mult: f64| {
        let scale = |b: f64| b.abs().max(1.0);
        if lo.is_finite() && value < lo {
            primal_residual = primal_residual.max((lo - value) / scale(lo));
        }
        if hi.is_finite() && value > hi {
            primal_residual = primal_residual.max((value - hi) / scale(hi));
        }
        if mult > 0.0 {
            if lo.is_finite() {
                complementarity = complementarity.max(mult * (value - lo).abs());
                dual_objective += mult * lo;
            } else {
                dual_residual = dual_residual.max(mult);
            }
        } else if mult < 0.0 {
            if hi.is_finite() {
                complementarity = complementarity.max(-mult * (hi - value).abs());
                dual_objective += mult * hi;
            } else {
                dual_residual = dual_residual.max(-mult);
            }
        }
    };

    for (i, kind) in lp.row_kinds.iter().enumerate() {
        let (lo, hi) = kind.bounds();
        account(activity[i], lo, hi, y[i]);
    }

    let mut reduced = lp.objective.clone();
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in row {
            reduced[j] -= y[i] * a;
        }
    }
    for (j, &(lo, hi)) in lp.var_bounds.iter().enumerate() {
        account(x[j], lo, hi, reduced[j]);
    }

    CertificateReport {
        primal_residual,
        dual_residual,
        complementarity,
        primal_objective: lp.objective_value(x),
        dual_objective,
    }
}
