use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::comm::ProtocolModel;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Ramp,
    Intersection,
    Platoon,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Ramp, Scenario::Intersection, Scenario::Platoon];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Ramp => "ramp",
            Scenario::Intersection => "intersection",
            Scenario::Platoon => "platoon",
        }
    }

    /// Name of the primary metric column for this scenario.
    pub fn metric_name(&self) -> &'static str {
        match self {
            Scenario::Ramp => "road_time",
            Scenario::Intersection => "total_time",
            Scenario::Platoon => "b_time",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "ramp" => Ok(Scenario::Ramp),
            "intersection" => Ok(Scenario::Intersection),
            "platoon" => Ok(Scenario::Platoon),
            other => Err(Error::Parse(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Per-vehicle outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleDetail {
    pub id: u32,
    /// Where the vehicle started: `mainline`, `ramp`, an approach heading, or
    /// its platoon position.
    pub origin: String,
    /// Scheduled arrival or start time, s.
    pub start_s: f64,
    /// Time the vehicle completed its measured segment, s.
    pub finish_s: Option<f64>,
    /// The vehicle's own contribution to the run metric, s.
    pub value_s: Option<f64>,
}

/// Scalar outputs of one simulation run plus per-vehicle rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scenario: Scenario,
    pub protocol: ProtocolModel,
    pub density: f64,
    pub theta_deg: Option<f64>,
    pub seed: u64,
    /// Road time, total time or brake time depending on the scenario, s.
    pub metric_s: f64,
    pub mivd_m: Option<f64>,
    pub gridlock: bool,
    pub fault: bool,
    /// Scenario-specific extras (e.g. brake distance, re-grant count).
    pub extras: Vec<(String, f64)>,
    pub vehicles: Vec<VehicleDetail>,
}

impl MetricsRecord {
    pub fn new(scenario: Scenario, protocol: ProtocolModel, density: f64, seed: u64) -> Self {
        Self {
            scenario,
            protocol,
            density,
            theta_deg: None,
            seed,
            metric_s: 0.0,
            mivd_m: None,
            gridlock: false,
            fault: false,
            extras: Vec::new(),
            vehicles: Vec::new(),
        }
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }

    /// Ordering key: scenario, protocol, density, theta, seed.
    pub(crate) fn sort_key(&self) -> (Scenario, u8, String, f64, f64, u64) {
        (
            self.scenario,
            self.protocol.rank(),
            self.protocol.to_string(),
            self.density,
            self.theta_deg.unwrap_or(f64::NEG_INFINITY),
            self.seed,
        )
    }
}

/// Stable ordering used by every writer.
pub fn sort_records(records: &mut [MetricsRecord]) {
    records.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.cmp(&kb.0)
            .then(ka.1.cmp(&kb.1))
            .then_with(|| ka.2.cmp(&kb.2))
            .then(ka.3.total_cmp(&kb.3))
            .then(ka.4.total_cmp(&kb.4))
            .then(ka.5.cmp(&kb.5))
    });
}
