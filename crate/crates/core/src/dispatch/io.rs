//! `lmp.csv`: `bus_id,period_index,lmp`; `congestion.csv`: `bus_id,score`.

use super::{CongestionScore, LmpVector};
use crate::network::{BusId, NetworkError, PowerNetwork};
use std::collections::BTreeMap;
use std::path::Path;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> NetworkError + '_ {
    move |source| NetworkError::Io { path: path.to_path_buf(), source }
}

pub fn write_lmp_csv(path: &Path, net: &PowerNetwork, lmps: &LmpVector) -> Result<(), NetworkError> {
    let io = io_err(path);
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(["bus_id", "period_index", "lmp"]).map_err(|e| io(e.into()))?;
    for t in 0..lmps.num_periods() {
        for (b, bus) in net.buses.iter().enumerate() {
            w.write_record([bus.id.to_string(), (lmps.start + t).to_string(), lmps.at(b, t).to_string()])
                .map_err(|e| io(e.into()))?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_lmp_csv(path: &Path, net: &PowerNetwork) -> Result<LmpVector, NetworkError> {
    let table = crate::network::case::Table::read(path)?;
    let (cb, ct, cl) = (table.column("bus_id")?, table.column("period_index")?, table.column("lmp")?);
    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for row in table.rows() {
        let id: BusId = row.parse(cb, "bus_id")?;
        let b = net
            .bus_index(id)
            .ok_or(NetworkError::UnknownBus { file: table.file().into(), line: row.line, bus: id })?;
        cells.insert((b, row.parse(ct, "period_index")?), row.parse(cl, "lmp")?);
    }
    let start = cells.keys().map(|k| k.1).min().unwrap_or(0);
    let end = cells.keys().map(|k| k.1 + 1).max().unwrap_or(0);
    let mut values = vec![vec![f64::NAN; end - start]; net.num_buses()];
    for ((b, t), v) in cells {
        values[b][t - start] = v;
    }
    if values.iter().flatten().any(|v| v.is_nan()) {
        return Err(NetworkError::Invalid(format!("{}: missing bus/period entries", table.file())));
    }
    Ok(LmpVector { values, start })
}

pub fn write_congestion_csv(path: &Path, net: &PowerNetwork, score: &CongestionScore) -> Result<(), NetworkError> {
    let io = io_err(path);
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(["bus_id", "score"]).map_err(|e| io(e.into()))?;
    for (bus, s) in net.buses.iter().zip(&score.scores) {
        w.write_record([bus.id.to_string(), s.to_string()]).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

/// The period count is not stored in the file and comes back as zero.
pub fn read_congestion_csv(path: &Path, net: &PowerNetwork) -> Result<CongestionScore, NetworkError> {
    let table = crate::network::case::Table::read(path)?;
    let (cb, cs) = (table.column("bus_id")?, table.column("score")?);
    let mut scores = vec![0.0; net.num_buses()];
    for row in table.rows() {
        let id: BusId = row.parse(cb, "bus_id")?;
        let b = net
            .bus_index(id)
            .ok_or(NetworkError::UnknownBus { file: table.file().into(), line: row.line, bus: id })?;
        scores[b] = row.parse(cs, "score")?;
    }
    Ok(CongestionScore { scores, periods: 0 })
}
