//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Each export has a plain Rust twin returning `Result<String, String>` so
//! the logic can be tested on the host without a JS engine.

use serde_json::json;
use wasm_bindgen::prelude::*;

use v2x_cosim::comm::ProtocolModel;
use v2x_cosim::metrics::{render_chart, ChartMetric, Scenario};
use v2x_cosim::scenario::{run_platoon, PlatoonConfig, PlatoonSim};

fn protocol(name: &str) -> Result<ProtocolModel, String> {
    name.parse().map_err(|e: v2x_cosim::Error| e.to_string())
}

fn densities(list: &str) -> Result<Vec<f64>, String> {
    list.split(',').map(|d| d.trim().parse::<f64>().map_err(|_| format!("bad density `{}`", d.trim()))).collect()
}

/// Hearing range and packet gap of `protocol` at `density` veh/h, as JSON.
pub fn link_params_json(protocol_name: &str, density: f64) -> Result<String, String> {
    let p = protocol(protocol_name)?;
    let link = p.params(density).map_err(|e| e.to_string())?;
    Ok(json!({ "protocol": p.to_string(), "density": density, "mhr_km": link.mhr_km, "ipg_ms": link.ipg_ms }).to_string())
}

/// One platoon emergency brake, with per-truck brake and stop instants.
pub fn platoon_brake_json(protocol_name: &str, density: f64, seed: u64) -> Result<String, String> {
    let cfg = PlatoonConfig::new(protocol(protocol_name)?, density, seed);
    let (record, timeline) = PlatoonSim::new(cfg).and_then(|sim| sim.run()).map_err(|e| e.to_string())?;
    Ok(json!({
        "protocol": record.protocol.to_string(),
        "density": density,
        "seed": seed,
        "b_time_s": record.metric_s,
        "mivd_m": record.mivd_m,
        "fault": record.fault,
        "brake_start_s": timeline.brake_start,
        "stop_time_s": timeline.stop_time,
    })
    .to_string())
}

/// SVG chart of brake time or MIVD against density for every built-in protocol.
pub fn platoon_chart_svg(density_list: &str, seed: u64, mivd: bool) -> Result<String, String> {
    let mut records = Vec::new();
    for d in densities(density_list)? {
        for p in [ProtocolModel::Cv2x, ProtocolModel::Dsrc] {
            records.push(run_platoon(&PlatoonConfig::new(p, d, seed)).map_err(|e| e.to_string())?);
        }
    }
    let metric = if mivd { ChartMetric::Mivd } else { ChartMetric::Primary };
    render_chart(&records, Scenario::Platoon, metric).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = linkParams)]
pub fn link_params(protocol_name: &str, density: f64) -> Result<String, JsError> {
    link_params_json(protocol_name, density).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = platoonBrake)]
pub fn platoon_brake(protocol_name: &str, density: f64, seed: u32) -> Result<String, JsError> {
    platoon_brake_json(protocol_name, density, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = platoonChart)]
pub fn platoon_chart(density_list: &str, seed: u32, mivd: bool) -> Result<String, JsError> {
    platoon_chart_svg(density_list, u64::from(seed), mivd).map_err(|e| JsError::new(&e))
}
