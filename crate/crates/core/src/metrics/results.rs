use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use super::record::{sort_records, MetricsRecord};
use crate::comm::ProtocolModel;
use crate::error::{Error, Result};

pub const HEADER: [&str; 9] = ["scenario", "protocol", "density", "theta_deg", "seed", "metric_s", "mivd_m", "gridlock", "fault"];

fn fixed(x: f64) -> String {
    format!("{x:.4}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fixed).unwrap_or_default()
}

fn sorted(records: &[MetricsRecord]) -> Result<Vec<MetricsRecord>> {
    if records.is_empty() {
        return Err(Error::Config("no records to write".into()));
    }
    let mut v = records.to_vec();
    sort_records(&mut v);
    Ok(v)
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// The results table as CSV text, rows in stable order.
pub fn results_csv(records: &[MetricsRecord]) -> Result<String> {
    let rows = sorted(records)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(HEADER).map_err(csv_err)?;
    for r in &rows {
        w.write_record([
            r.scenario.to_string(),
            r.protocol.to_string(),
            fixed(r.density),
            opt(r.theta_deg),
            r.seed.to_string(),
            fixed(r.metric_s),
            opt(r.mivd_m),
            r.gridlock.to_string(),
            r.fault.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// JSON mirror of [`results_csv`]: an array of objects with the same keys.
pub fn results_json(records: &[MetricsRecord]) -> Result<String> {
    let rows: Vec<Value> = sorted(records)?
        .iter()
        .map(|r| {
            json!({
                "scenario": r.scenario.as_str(),
                "protocol": r.protocol.to_string(),
                "density": round4(r.density),
                "theta_deg": r.theta_deg.map(round4),
                "seed": r.seed,
                "metric_s": round4(r.metric_s),
                "mivd_m": r.mivd_m.map(round4),
                "gridlock": r.gridlock,
                "fault": r.fault,
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes the CSV results table to `path`.
pub fn write_results(records: &[MetricsRecord], path: &Path) -> Result<()> {
    let text = results_csv(records)?;
    fs::write(path, text).map_err(io(path))
}

/// Writes the JSON results mirror to `path`.
pub fn write_results_json(records: &[MetricsRecord], path: &Path) -> Result<()> {
    let text = results_json(records)?;
    fs::write(path, text).map_err(io(path))
}

/// Reads CSV text produced by [`results_csv`]. Extras and per-vehicle rows
/// are not part of the table and come back empty.
pub fn parse_results(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(Error::Parse(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Parse(e.to_string()))?;
        let bad = |what: &str| Error::Parse(format!("row {}: bad {what}", line + 1));
        let num = |i: usize, what: &str| row[i].parse::<f64>().map_err(|_| bad(what));
        let opt_num = |i: usize, what: &str| {
            if row[i].is_empty() {
                Ok(None)
            } else {
                num(i, what).map(Some)
            }
        };
        let flag = |i: usize, what: &str| row[i].parse::<bool>().map_err(|_| bad(what));
        let protocol: ProtocolModel = row[1].parse()?;
        let mut rec = MetricsRecord::new(row[0].parse()?, protocol, num(2, "density")?, row[4].parse().map_err(|_| bad("seed"))?);
        rec.theta_deg = opt_num(3, "theta")?;
        rec.metric_s = num(5, "metric")?;
        rec.mivd_m = opt_num(6, "mivd")?;
        rec.gridlock = flag(7, "gridlock")?;
        rec.fault = flag(8, "fault")?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads a CSV results file.
pub fn read_results(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    parse_results(&text)
}
