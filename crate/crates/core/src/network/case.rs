//! Case directory layout:
//!
//! * `buses.csv`: `bus_id,name[,slack]`
//! * `lines.csv`: `line_id,from_bus,to_bus,reactance,flow_limit`
//! * `generators.csv`: `gen_id,bus_id,marginal_cost,p_min,p_max`
//! * `loads.csv`: `bus_id,period_index,load_mw` (long format, one row per bus and period)

use super::{
    validate_series, Bus, BusId, GeneratorSpec, LineSpec, LoadProfile, LoadSeries, NetworkError,
    PowerNetwork,
};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

pub(crate) struct Table {
    file: String,
    headers: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    pub(crate) fn read(path: &Path) -> Result<Self, NetworkError> {
        let file = path.file_name().map_or_else(
            || path.display().to_string(),
            |f| f.to_string_lossy().into_owned(),
        );
        let data = std::fs::read(path).map_err(|source| NetworkError::Io { path: path.to_path_buf(), source })?;
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(data.as_slice());
        let headers = rdr
            .headers()
            .map_err(|e| NetworkError::Parse { file: file.clone(), line: 1, msg: e.to_string() })?
            .iter()
            .map(|h| h.to_ascii_lowercase())
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| NetworkError::Parse {
                file: file.clone(),
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Self { file, headers, rows })
    }

    pub(crate) fn column(&self, name: &str) -> Result<usize, NetworkError> {
        self.optional_column(name).ok_or_else(|| NetworkError::MissingColumn {
            file: self.file.clone(),
            column: name.into(),
        })
    }

    pub(crate) fn optional_column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub(crate) fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        self.rows.iter().map(move |(line, rec)| Row { file: &self.file, line: *line, rec })
    }

    pub(crate) fn file(&self) -> &str {
        &self.file
    }
}

pub(crate) struct Row<'a> {
    file: &'a str,
    pub(crate) line: u64,
    rec: &'a csv::StringRecord,
}

impl Row<'_> {
    pub(crate) fn str(&self, col: usize) -> &str {
        self.rec.get(col).unwrap_or("")
    }

    pub(crate) fn parse<T: FromStr>(&self, col: usize, what: &str) -> Result<T, NetworkError> {
        let raw = self.str(col);
        raw.parse().map_err(|_| self.error(format!("cannot parse {what} from {raw:?}")))
    }

    /// `None` for a missing or empty cell.
    pub(crate) fn parse_opt<T: FromStr>(&self, col: Option<usize>, what: &str) -> Result<Option<T>, NetworkError> {
        match col {
            Some(c) if !self.str(c).is_empty() => self.parse(c, what).map(Some),
            _ => Ok(None),
        }
    }

    pub(crate) fn error(&self, msg: String) -> NetworkError {
        NetworkError::Parse { file: self.file.into(), line: self.line, msg }
    }
}

fn parse_flag(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" => Some(false),
        "1" | "true" | "yes" => Some(true),
        _ => None,
    }
}

/// Reads `buses.csv`, `lines.csv` and `generators.csv` from `dir`.
pub fn load_case(dir: &Path) -> Result<PowerNetwork, NetworkError> {
    let buses_t = Table::read(&dir.join("buses.csv"))?;
    let (c_id, c_name) = (buses_t.column("bus_id")?, buses_t.column("name")?);
    let c_slack = buses_t.optional_column("slack");
    let mut buses = Vec::new();
    let mut slack = None;
    for row in buses_t.rows() {
        let id: BusId = row.parse(c_id, "bus_id")?;
        if let Some(c) = c_slack {
            let flag = parse_flag(row.str(c)).ok_or_else(|| row.error(format!("bad slack flag {:?}", row.str(c))))?;
            if flag {
                if slack.is_some() {
                    return Err(row.error("more than one slack bus".into()));
                }
                slack = Some(id);
            }
        }
        if buses.iter().any(|b: &Bus| b.id == id) {
            return Err(row.error(format!("duplicate bus id {id}")));
        }
        buses.push(Bus { id, name: row.str(c_name).to_string() });
    }

    let known = |id: BusId, row: &Row<'_>, file: &str| {
        if buses.iter().any(|b| b.id == id) {
            Ok(id)
        } else {
            Err(NetworkError::UnknownBus { file: file.into(), line: row.line, bus: id })
        }
    };

    let lines_t = Table::read(&dir.join("lines.csv"))?;
    let cols = ["line_id", "from_bus", "to_bus", "reactance", "flow_limit"]
        .map(|c| lines_t.column(c))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut lines = Vec::new();
    for row in lines_t.rows() {
        let spec = LineSpec {
            id: row.parse(cols[0], "line_id")?,
            from_bus: known(row.parse(cols[1], "from_bus")?, &row, lines_t.file())?,
            to_bus: known(row.parse(cols[2], "to_bus")?, &row, lines_t.file())?,
            reactance: row.parse(cols[3], "reactance")?,
            flow_limit: row.parse(cols[4], "flow_limit")?,
        };
        if !(spec.reactance > 0.0) || !(spec.flow_limit > 0.0) {
            return Err(row.error("reactance and flow_limit must be positive".into()));
        }
        if spec.from_bus == spec.to_bus {
            return Err(row.error(format!("line connects bus {} to itself", spec.from_bus)));
        }
        lines.push(spec);
    }

    let gens_t = Table::read(&dir.join("generators.csv"))?;
    let cols = ["gen_id", "bus_id", "marginal_cost", "p_min", "p_max"]
        .map(|c| gens_t.column(c))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut gens = Vec::new();
    for row in gens_t.rows() {
        let spec = GeneratorSpec {
            id: row.parse(cols[0], "gen_id")?,
            bus: known(row.parse(cols[1], "bus_id")?, &row, gens_t.file())?,
            marginal_cost: row.parse(cols[2], "marginal_cost")?,
            p_min: row.parse(cols[3], "p_min")?,
            p_max: row.parse(cols[4], "p_max")?,
        };
        if !(spec.p_min >= 0.0 && spec.p_min <= spec.p_max) {
            return Err(row.error("need 0 <= p_min <= p_max".into()));
        }
        gens.push(spec);
    }

    PowerNetwork::new(buses, lines, gens, slack)
}

/// Reads a long-format load file. Every bus present must cover periods
/// `0..T` exactly once with the same `T`; buses absent from the file carry
/// no load.
pub fn load_loads(path: &Path, net: &PowerNetwork) -> Result<LoadProfile, NetworkError> {
    let t = Table::read(path)?;
    let (c_bus, c_t, c_mw) = (t.column("bus_id")?, t.column("period_index")?, t.column("load_mw")?);
    let mut by_bus: BTreeMap<BusId, BTreeMap<usize, f64>> = BTreeMap::new();
    for row in t.rows() {
        let bus: BusId = row.parse(c_bus, "bus_id")?;
        if net.bus_index(bus).is_none() {
            return Err(NetworkError::UnknownBus { file: t.file().into(), line: row.line, bus });
        }
        let period: usize = row.parse(c_t, "period_index")?;
        let mw: f64 = row.parse(c_mw, "load_mw")?;
        if !(mw >= 0.0) || !mw.is_finite() {
            return Err(row.error(format!("load must be a nonnegative number, got {mw}")));
        }
        if by_bus.entry(bus).or_default().insert(period, mw).is_some() {
            return Err(row.error(format!("duplicate period {period} for bus {bus}")));
        }
    }
    let mut series = Vec::with_capacity(by_bus.len());
    for (bus, periods) in by_bus {
        let len = periods.len();
        if let Some((_, &p)) = periods.keys().enumerate().find(|(i, p)| i != *p) {
            return Err(NetworkError::HorizonMismatch(format!(
                "bus {bus} has {len} periods but indices are not 0..{len} (saw {p})"
            )));
        }
        series.push(LoadSeries { bus, values: periods.into_values().collect() });
    }
    validate_series(net, &series)?;
    Ok(LoadProfile::new(series))
}

/// Writes `profile` in the long format read by [`load_loads`].
pub fn write_loads(path: &Path, profile: &LoadProfile) -> Result<(), NetworkError> {
    let io = |source| NetworkError::Io { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(["bus_id", "period_index", "load_mw"]).map_err(|e| io(e.into()))?;
    for s in &profile.series {
        for (t, v) in s.values.iter().enumerate() {
            w.write_record([s.bus.to_string(), t.to_string(), v.to_string()])
                .map_err(|e| io(e.into()))?;
        }
    }
    w.flush().map_err(io)
}
