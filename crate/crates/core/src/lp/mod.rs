//! Linear programming core: bounded-variable revised simplex, dual
//! extraction, objective ranging and a small branch-and-bound layer.
//!
//! Every problem is a minimization. Row duals follow the shadow-price
//! convention `row_dual = d(objective) / d(row bound)`, so
//!
//! * equality rows carry an unrestricted dual,
//! * a `>=` row (or a range row resting on its lower bound) has dual `>= 0`,
//! * a `<=` row (or a range row resting on its upper bound) has dual `<= 0`.
//!
//! Reduced costs are `c_j - row_duals . A_j`; a variable resting on its lower
//! bound has a nonnegative reduced cost and one on its upper bound a
//! nonpositive one.

mod certificate;
mod milp;
mod sensitivity;
mod simplex;
mod text;

pub use certificate::{check_certificate, CertificateReport};
pub use milp::{solve_milp, solve_milp_with, MilpOptions, MilpProblem, MilpSolution};
pub use sensitivity::{objective_sensitivity_range, SensitivityRange};
pub use simplex::{solve_lp, solve_lp_with};
pub use text::ParseLpError;

use thiserror::Error;

/// Numerical tolerances shared by the solver and the certificate checks.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Primal feasibility.
    pub feas: f64,
    /// Complementary slackness products.
    pub comp: f64,
    /// Absolute primal/dual objective gap.
    pub gap: f64,
    /// Distance of a binary from {0, 1}.
    pub int: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas: 1e-7,
            comp: 1e-6,
            gap: 1e-6,
            int: 1e-6,
        }
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Structure(String),
    #[error("simplex stalled after {0} iterations")]
    IterationLimit(usize),
    #[error("basis matrix became singular")]
    SingularBasis,
    #[error("solution is not optimal; sensitivity ranging needs an optimal basis")]
    NotOptimal,
    #[error("variable index {0} out of range")]
    BadIndex(usize),
}

/// Sense and bounds of one constraint row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowKind {
    Equal(f64),
    LessEqual(f64),
    GreaterEqual(f64),
    /// `lo <= a.x <= hi`
    Range(f64, f64),
}

impl RowKind {
    /// Lower and upper bound on the row activity.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            RowKind::Equal(b) => (b, b),
            RowKind::LessEqual(b) => (f64::NEG_INFINITY, b),
            RowKind::GreaterEqual(b) => (b, f64::INFINITY),
            RowKind::Range(lo, hi) => (lo, hi),
        }
    }
}

/// A sparse row: `(column, coefficient)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

/// `minimize c.x` subject to row bounds on `A x` and box bounds on `x`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<SparseRow>,
    pub row_kinds: Vec<RowKind>,
    pub var_bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds a column and returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.var_bounds.push((lower, upper));
        self.objective.len() - 1
    }

    /// Adds a row and returns its index. Zero coefficients are dropped.
    pub fn add_row(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>, kind: RowKind) -> usize {
        let row: SparseRow = coeffs.into_iter().filter(|&(_, a)| a != 0.0).collect();
        self.rows.push(row);
        self.row_kinds.push(kind);
        self.rows.len() - 1
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.var_bounds.len() != n {
            return Err(LpError::Structure(format!(
                "{} variable bounds for {} objective coefficients",
                self.var_bounds.len(),
                n
            )));
        }
        if self.rows.len() != self.row_kinds.len() {
            return Err(LpError::Structure(format!(
                "{} rows but {} row kinds",
                self.rows.len(),
                self.row_kinds.len()
            )));
        }
        for (j, &(lo, hi)) in self.var_bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::Structure(format!("variable {j} has invalid bounds [{lo}, {hi}]")));
            }
            if !self.objective[j].is_finite() {
                return Err(LpError::Structure(format!("variable {j} has non-finite cost")));
            }
        }
        for (i, (row, kind)) in self.rows.iter().zip(&self.row_kinds).enumerate() {
            for &(j, a) in row {
                if j >= n {
                    return Err(LpError::Structure(format!("row {i} references column {j} of {n}")));
                }
                if !a.is_finite() {
                    return Err(LpError::Structure(format!("row {i} has non-finite coefficient")));
                }
            }
            let (lo, hi) = kind.bounds();
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::Structure(format!("row {i} has invalid bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Row activities `A x`.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Where a column sits in the final basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column held at zero.
    Free,
}

/// Column of the internal standard form `[A  -I  ±e_i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Column {
    Structural(usize),
    Logical(usize),
    Artificial(usize, f64),
}

/// Final basis of an optimal solve; enough to rebuild `B` for ranging.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub(crate) basic: Vec<Column>,
    pub(crate) structural: Vec<VarStatus>,
    pub(crate) logical: Vec<VarStatus>,
}

impl Basis {
    pub fn structural_status(&self) -> &[VarStatus] {
        &self.structural
    }

    pub fn logical_status(&self) -> &[VarStatus] {
        &self.logical
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective_value: f64,
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Some basic variable sits on a bound, so the duals may not be unique.
    pub degenerate: bool,
    pub iterations: usize,
    pub basis: Option<Basis>,
}

impl LpSolution {
    pub(crate) fn without_point(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            primal: Vec::new(),
            objective_value: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            },
            row_duals: Vec::new(),
            reduced_costs: Vec::new(),
            degenerate: false,
            iterations,
            basis: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}
