//! Plain-text dump of a [`LinearProgram`], one record per line:
//!
//! ```text
//! lp <num_vars> <num_rows>
//! obj <c_0> <c_1> ...
//! var <j> <lower> <upper>
//! row <E|L|G|R> <lower> <upper> <j>:<a_j> <j>:<a_j> ...
//! ```
//!
//! Infinite bounds are written `inf` / `-inf`. For `L` rows the lower field
//! is `-inf`, for `G` rows the upper field is `inf`, and `E` rows repeat the
//! right-hand side in both fields. Lines starting with `#` are ignored.

use super::{LinearProgram, RowKind};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("line {line}: {msg}")]
pub struct ParseLpError {
    pub line: usize,
    pub msg: String,
}

impl LinearProgram {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "lp {} {}", self.num_vars(), self.num_rows());
        out.push_str("obj");
        for c in &self.objective {
            let _ = write!(out, " {c}");
        }
        out.push('\n');
        for (j, (lo, hi)) in self.var_bounds.iter().enumerate() {
            let _ = writeln!(out, "var {j} {lo} {hi}");
        }
        for (row, kind) in self.rows.iter().zip(&self.row_kinds) {
            let tag = match kind {
                RowKind::Equal(_) => 'E',
                RowKind::LessEqual(_) => 'L',
                RowKind::GreaterEqual(_) => 'G',
                RowKind::Range(..) => 'R',
            };
            let (lo, hi) = kind.bounds();
            let _ = write!(out, "row {tag} {lo} {hi}");
            for (j, a) in row {
                let _ = write!(out, " {j}:{a}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ParseLpError> {
        let mut lp = LinearProgram::new();
        let mut declared: Option<(usize, usize)> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |msg: String| ParseLpError { line, msg };
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let mut tok = raw.split_whitespace();
            match tok.next() {
                Some("lp") => {
                    let n = tok.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("missing var count".into()))?;
                    let m = tok.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("missing row count".into()))?;
                    declared = Some((n, m));
                    lp.var_bounds = vec![(0.0, f64::INFINITY); n];
                }
                Some("obj") => {
                    lp.objective = tok.map(num).collect::<Result<_, _>>()?;
                }
                Some("var") => {
                    let j: usize = tok.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("missing index".into()))?;
                    let lo = num(tok.next().ok_or_else(|| err("missing lower".into()))?)?;
                    let hi = num(tok.next().ok_or_else(|| err("missing upper".into()))?)?;
                    *lp.var_bounds.get_mut(j).ok_or_else(|| err(format!("variable {j} not declared")))? = (lo, hi);
                }
                Some("row") => {
                    let tag = tok.next().ok_or_else(|| err("missing row kind".into()))?;
                    let lo = num(tok.next().ok_or_else(|| err("missing lower".into()))?)?;
                    let hi = num(tok.next().ok_or_else(|| err("missing upper".into()))?)?;
                    let kind = match tag {
                        "E" => RowKind::Equal(lo),
                        "L" => RowKind::LessEqual(hi),
                        "G" => RowKind::GreaterEqual(lo),
                        "R" => RowKind::Range(lo, hi),
                        other => return Err(err(format!("unknown row kind {other:?}"))),
                    };
                    let mut coeffs = Vec::new();
                    for t in tok {
                        let (j, a) = t.split_once(':').ok_or_else(|| err(format!("bad entry {t:?}")))?;
                        let j: usize = j.parse().map_err(|_| err(format!("bad column {j:?}")))?;
                        coeffs.push((j, num(a)?));
                    }
                    lp.rows.push(coeffs);
                    lp.row_kinds.push(kind);
                }
                Some(other) => return Err(err(format!("unknown record {other:?}"))),
                None => {}
            }
        }
        let (n, m) = declared.ok_or(ParseLpError { line: 0, msg: "missing `lp` header".into() })?;
        if lp.objective.len() != n || lp.rows.len() != m {
            return Err(ParseLpError {
                line: 0,
                msg: format!(
                    "header declares {n} vars / {m} rows, found {} / {}",
                    lp.objective.len(),
                    lp.rows.len()
                ),
            });
        }
        Ok(lp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bound() -> impl Strategy<Value = f64> {
        prop_oneof![Just(f64::INFINITY), Just(f64::NEG_INFINITY), -1e6f64..1e6]
    }

    proptest! {
        #[test]
        fn text_round_trip(
            costs in proptest::collection::vec(-1e3f64..1e3, 1..6),
            rows in proptest::collection::vec((proptest::collection::vec((0usize..6, -50f64..50.0), 0..5), 0u8..4, -100f64..100.0, 0f64..50.0), 0..5),
            lo in bound(),
        ) {
            let mut lp = LinearProgram::new();
            for &c in &costs {
                let (l, h) = if lo.is_finite() { (lo, lo + 1.0) } else { (lo, f64::INFINITY) };
                lp.add_var(c, l, h);
            }
            let n = costs.len();
            for (entries, tag, b, w) in rows {
                let kind = match tag {
                    0 => RowKind::Equal(b),
                    1 => RowKind::LessEqual(b),
                    2 => RowKind::GreaterEqual(b),
                    _ => RowKind::Range(b, b + w),
                };
                lp.add_row(entries.into_iter().map(|(j, a)| (j % n, a)), kind);
            }
            let back = LinearProgram::from_text(&lp.to_text()).unwrap();
            prop_assert_eq!(back, lp);
        }
    }

    #[test]
    fn reports_line_of_bad_record() {
        let e = LinearProgram::from_text("lp 1 0\nobj 1\nfoo\n").unwrap_err();
        assert_eq!(e.line, 3);
    }
}
