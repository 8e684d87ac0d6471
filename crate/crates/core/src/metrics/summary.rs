use std::fmt::Write;

use super::record::{sort_records, MetricsRecord};

/// Sample mean and standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

struct Cell<'a> {
    head: &'a MetricsRecord,
    metric: Vec<f64>,
    mivd: Vec<f64>,
    flagged: usize,
}

/// Aligned text table with one line per (scenario, protocol, density,
/// theta) cell and mean ± stddev across seeds.
pub fn summarize(records: &[MetricsRecord]) -> String {
    let mut rows = records.to_vec();
    sort_records(&mut rows);
    let mut cells: Vec<Cell> = Vec::new();
    for r in &rows {
        let same = cells.last().is_some_and(|c| {
            c.head.scenario == r.scenario && c.head.protocol == r.protocol && c.head.density == r.density && c.head.theta_deg == r.theta_deg
        });
        if !same {
            cells.push(Cell { head: r, metric: Vec::new(), mivd: Vec::new(), flagged: 0 });
        }
        let c = cells.last_mut().expect("just pushed");
        c.metric.push(r.metric_s);
        c.mivd.extend(r.mivd_m);
        c.flagged += usize::from(r.gridlock || r.fault);
    }

    let header = ["scenario", "protocol", "density", "theta", "seeds", "metric_s (mean ± sd)", "mivd_m (mean ± sd)", "flagged"];
    let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for c in &cells {
        let (m, s) = mean_std(&c.metric);
        let mivd = if c.mivd.is_empty() {
            "-".to_string()
        } else {
            let (m, s) = mean_std(&c.mivd);
            format!("{m:.4} ± {s:.4}")
        };
        table.push(vec![
            c.head.scenario.to_string(),
            c.head.protocol.to_string(),
            format!("{:.0}", c.head.density),
            c.head.theta_deg.map_or("-".into(), |t| format!("{t:.0}")),
            c.metric.len().to_string(),
            format!("{m:.4} ± {s:.4}"),
            mivd,
            c.flagged.to_string(),
        ]);
    }
    let widths: Vec<usize> = (0..header.len()).map(|i| table.iter().map(|row| row[i].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (cell, &w))| {
                let pad = w - cell.chars().count();
                if i < 2 {
                    format!("{cell}{}", " ".repeat(pad))
                } else {
                    format!("{}{cell}", " ".repeat(pad))
                }
            })
            .collect();
        writeln!(out, "{}", line.join("  ").trim_end()).expect("writing to a string");
    }
    out
}
