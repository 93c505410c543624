use super::simplex::invert;
use super::{Column, LinearProgram, LpError, LpSolution, VarStatus};

/// Interval of objective coefficients over which the reported basis stays
/// optimal.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SensitivityRange {
    pub var_index: usize,
    pub coeff_low: f64,
    pub coeff_high: f64,
    /// The basis is primal degenerate; other optimal bases may allow a wider
    /// interval, so this one may be narrower than the true range.
    pub conservative: bool,
}

impl SensitivityRange {
    pub fn contains(&self, c: f64) -> bool {
        c >= self.coeff_low && c <= self.coeff_high
    }
}

/// Cost ranging for column `var` of an optimal solve.
pub fn objective_sensitivity_range(
    lp: &LinearProgram,
    sol: &LpSolution,
    var: usize,
) -> Result<SensitivityRange, LpError> {
    let basis = sol.basis.as_ref().ok_or(LpError::NotOptimal)?;
    let n = lp.num_vars();
    let m = lp.num_rows();
    if var >= n {
        return Err(LpError::BadIndex(var));
    }
    let c = lp.objective[var];
    let range = |lo: f64, hi: f64| SensitivityRange {
        var_index: var,
        coeff_low: lo,
        coeff_high: hi,
        conservative: sol.degenerate,
    };
    let (vlo, vhi) = lp.var_bounds[var];

    match basis.structural[var] {
        VarStatus::AtLower | VarStatus::AtUpper if vlo == vhi => {
            return Ok(range(f64::NEG_INFINITY, f64::INFINITY))
        }
        VarStatus::AtLower => return Ok(range(c - sol.reduced_costs[var], f64::INFINITY)),
        VarStatus::AtUpper => return Ok(range(f64::NEG_INFINITY, c - sol.reduced_costs[var])),
        VarStatus::Free => return Ok(range(c, c)),
        VarStatus::Basic => {}
    }

    let r = basis
        .basic
        .iter()
        .position(|&col| col == Column::Structural(var))
        .ok_or(LpError::NotOptimal)?;

    // Row r of B^-1.
    let mut b = vec![0.0; m * m];
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in row {
            columns[j].push((i, a));
        }
    }
    for (pos, col) in basis.basic.iter().enumerate() {
        match *col {
            Column::Structural(j) => {
                for &(i, a) in &columns[j] {
                    b[i * m + pos] = a;
                }
            }
            Column::Logical(i) => b[i * m + pos] = -1.0,
            Column::Artificial(i, s) => b[i * m + pos] = s,
        }
    }
    let binv = invert(&mut b, m).ok_or(LpError::SingularBasis)?;
    let brow = &binv[r * m..(r + 1) * m];

    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut tighten = |status: VarStatus, d: f64, alpha: f64| {
        if alpha.abs() < 1e-11 {
            return;
        }
        let t = d / alpha;
        match status {
            VarStatus::AtLower => {
                if alpha > 0.0 {
                    hi = hi.min(t)
                } else {
                    lo = lo.max(t)
                }
            }
            VarStatus::AtUpper => {
                if alpha > 0.0 {
                    lo = lo.max(t)
                } else {
                    hi = hi.min(t)
                }
            }
            VarStatus::Free => {
                lo = lo.max(0.0);
                hi = hi.min(0.0);
            }
            VarStatus::Basic => {}
        }
    };

    for k in 0..n {
        let st = basis.structural[k];
        if st == VarStatus::Basic || lp.var_bounds[k].0 == lp.var_bounds[k].1 {
            continue;
        }
        let alpha: f64 = columns[k].iter().map(|&(i, a)| brow[i] * a).sum();
        tighten(st, sol.reduced_costs[k], alpha);
    }
    for i in 0..m {
        let st = basis.logical[i];
        let (rlo, rhi) = lp.row_kinds[i].bounds();
        if st == VarStatus::Basic || rlo == rhi {
            continue;
        }
        // Logical column is -e_i, its reduced cost is the row dual.
        tighten(st, sol.row_duals[i], -brow[i]);
    }
    // Guard against round-off pushing the current value outside.
    Ok(range((c + lo).min(c), (c + hi).max(c)))
}
