use std::collections::BTreeMap;
use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use super::record::{sort_records, MetricsRecord, Scenario};
use crate::error::{Error, Result};

/// Quantity plotted on the y axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartMetric {
    /// The scenario's primary time metric.
    Primary,
    Mivd,
}

impl ChartMetric {
    pub fn name(&self, scenario: Scenario) -> &'static str {
        match self {
            ChartMetric::Primary => scenario.metric_name(),
            ChartMetric::Mivd => "mivd",
        }
    }

    fn axis_label(&self, scenario: Scenario) -> &'static str {
        match (self, scenario) {
            (ChartMetric::Mivd, _) => "MIVD (m)",
            (_, Scenario::Ramp) => "Road time (s)",
            (_, Scenario::Intersection) => "Total time (s)",
            (_, Scenario::Platoon) => "Brake time (s)",
        }
    }

    fn value(&self, r: &MetricsRecord) -> Option<f64> {
        match self {
            ChartMetric::Primary => Some(r.metric_s),
            ChartMetric::Mivd => r.mivd_m,
        }
    }
}

/// Metrics worth charting for a scenario.
pub fn chart_metrics(scenario: Scenario) -> &'static [ChartMetric] {
    match scenario {
        Scenario::Platoon => &[ChartMetric::Primary, ChartMetric::Mivd],
        _ => &[ChartMetric::Primary],
    }
}

/// `<scenario>_<metric>.svg`
pub fn chart_file_name(scenario: Scenario, metric: ChartMetric) -> String {
    format!("{}_{}.svg", scenario.as_str(), metric.name(scenario))
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart of seed-averaged `metric` against density, one polyline per
/// protocol (and per merge angle for ramp runs).
pub fn render_chart(records: &[MetricsRecord], scenario: Scenario, metric: ChartMetric) -> Result<String> {
    let mut rows: Vec<MetricsRecord> = records.iter().filter(|r| r.scenario == scenario).cloned().collect();
    sort_records(&mut rows);
    // series label -> density bits -> values
    let mut series: Vec<(String, BTreeMap<u64, Vec<f64>>)> = Vec::new();
    for r in &rows {
        let Some(y) = metric.value(r) else { continue };
        let label = match r.theta_deg {
            Some(t) if scenario == Scenario::Ramp => format!("{} {t:.0}°", r.protocol),
            _ => r.protocol.to_string(),
        };
        let idx = match series.iter().position(|(l, _)| *l == label) {
            Some(i) => i,
            None => {
                series.push((label, BTreeMap::new()));
                series.len() - 1
            }
        };
        series[idx].1.entry(r.density.to_bits()).or_default().push(y);
    }
    let xs: Vec<f64> = {
        let mut v: Vec<f64> = series.iter().flat_map(|(_, m)| m.keys().map(|&b| f64::from_bits(b))).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    if xs.len() < 2 {
        return Err(Error::Chart(format!("need at least 2 densities to draw {} for {scenario}, got {}", metric.name(scenario), xs.len())));
    }
    let points: Vec<(String, Vec<(f64, f64)>)> = series
        .into_iter()
        .map(|(l, m)| (l, m.into_iter().map(|(b, v)| (f64::from_bits(b), v.iter().sum::<f64>() / v.len() as f64)).collect()))
        .collect();
    let ys = points.iter().flat_map(|(_, p)| p.iter().map(|&(_, y)| y));
    let (mut y_lo, mut y_hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    y_lo = y_lo.min(0.0);
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let step = nice_step(y_hi - y_lo);
    let y_lo = (y_lo / step).floor() * step;
    let y_hi = (y_hi / step).ceil() * step;
    let (x_lo, x_hi) = (xs[0], xs[xs.len() - 1]);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let py = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{} {}</text>"#,
        LEFT + pw / 2.0,
        scenario.as_str(),
        metric.name(scenario)
    );
    // axes
    let _ = writeln!(w, r#"<line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#, TOP + ph, LEFT + pw, TOP + ph);
    let _ = writeln!(w, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#, TOP + ph);
    let n_ticks = ((y_hi - y_lo) / step).round() as i64;
    for k in 0..=n_ticks {
        let y = y_lo + k as f64 * step;
        let yy = py(y);
        let _ = writeln!(w, r##"<line x1="{LEFT}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(w, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 6.0, yy + 4.0, trim_num(y));
    }
    for &x in &xs {
        let xx = px(x);
        let _ = writeln!(w, r#"<line x1="{xx:.1}" y1="{:.1}" x2="{xx:.1}" y2="{:.1}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(w, r#"<text x="{xx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, trim_num(x));
    }
    let _ = writeln!(w, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Density (veh/h)</text>"#, LEFT + pw / 2.0, H - 12.0);
    let _ = writeln!(
        w,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        metric.axis_label(scenario)
    );
    for (i, (label, pts)) in points.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(w, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, path.join(" "));
        for &(x, y) in pts {
            let _ = writeln!(w, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = TOP + 10.0 + i as f64 * 18.0;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(w, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, lx + 18.0);
        let _ = writeln!(w, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 24.0, ly + 4.0, esc(label));
    }
    let _ = writeln!(w, "</svg>");
    Ok(s)
}

fn trim_num(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Renders and writes `<dir>/<scenario>_<metric>.svg`, returning the path.
pub fn write_chart(records: &[MetricsRecord], scenario: Scenario, metric: ChartMetric, dir: &Path) -> Result<PathBuf> {
    let svg = render_chart(records, scenario, metric)?;
    let path = dir.join(chart_file_name(scenario, metric));
    fs::write(&path, svg).map_err(|source| Error::Io { path: path.clone(), source })?;
    Ok(path)
}
