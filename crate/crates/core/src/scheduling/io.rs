//! Schedule export: `battery_id,t,pc,pd,e,cashflow`, one row per battery
//! and period; `e` is the SOC at the start of the period.

use super::ScheduleSolution;
use crate::network::case::Table;
use crate::network::NetworkError;
use std::path::Path;

pub fn write_schedule_csv(path: &Path, sol: &ScheduleSolution) -> Result<(), NetworkError> {
    let io = |source| NetworkError::Io { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(["battery_id", "t", "pc", "pd", "e", "cashflow"]).map_err(|e| io(e.into()))?;
    for (i, id) in sol.candidate_ids.iter().enumerate() {
        for t in 0..sol.num_periods() {
            w.write_record([
                id.to_string(),
                t.to_string(),
                sol.charge[i][t].to_string(),
                sol.discharge[i][t].to_string(),
                sol.soc[i][t].to_string(),
                sol.cashflow[i][t].to_string(),
            ])
            .map_err(|e| io(e.into()))?;
        }
    }
    w.flush().map_err(io)
}

/// One battery's `[pc, pd, e, cashflow]` rows, indexed by period.
pub type ScheduleRows = (u32, Vec<[f64; 4]>);

/// Per-battery rows of `(t, pc, pd, e, cashflow)` in file order.
pub fn read_schedule_csv(path: &Path) -> Result<Vec<ScheduleRows>, NetworkError> {
    let t = Table::read(path)?;
    let cols = ["battery_id", "t", "pc", "pd", "e", "cashflow"]
        .map(|c| t.column(c))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut out: Vec<ScheduleRows> = Vec::new();
    for row in t.rows() {
        let id: u32 = row.parse(cols[0], "battery_id")?;
        let period: usize = row.parse(cols[1], "t")?;
        let vals = [
            row.parse(cols[2], "pc")?,
            row.parse(cols[3], "pd")?,
            row.parse(cols[4], "e")?,
            row.parse(cols[5], "cashflow")?,
        ];
        let pos = match out.iter().position(|(b, _)| *b == id) {
            Some(p) => p,
            None => {
                out.push((id, Vec::new()));
                out.len() - 1
            }
        };
        if out[pos].1.len() != period {
            return Err(row.error(format!("expected period {} for battery {id}", out[pos].1.len())));
        }
        out[pos].1.push(vals);
    }
    Ok(out)
}
