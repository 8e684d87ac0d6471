//! Run plans: which scenario runs to execute and with which knobs.
//!
//! Every setting has a flat `key = value` name shared by config files and
//! command-line flags (`--custom-mhr-km` is the key `custom_mhr_km`).

use std::path::PathBuf;

use crate::comm::ProtocolModel;
use crate::error::{Error, Result};
use crate::metrics::{MetricsRecord, Scenario};
use crate::scenario::{run_intersection, run_platoon, run_ramp, IntersectionConfig, PlatoonConfig, RampConfig, Relay};

/// Protocol families as named in configs, before custom values are attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolChoice {
    Cv2x,
    Dsrc,
    Custom,
}

impl std::str::FromStr for ProtocolChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cv2x" | "c-v2x" => Ok(ProtocolChoice::Cv2x),
            "dsrc" => Ok(ProtocolChoice::Dsrc),
            "custom" => Ok(ProtocolChoice::Custom),
            other => Err(Error::Config(format!("unknown protocol `{other}` (expected cv2x|dsrc|custom)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// One point of the plan grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub scenario: Scenario,
    pub protocol: ProtocolModel,
    pub density: f64,
    pub theta_deg: Option<f64>,
    pub seed: u64,
}

impl std::fmt::Display for RunSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} density={}", self.scenario, self.protocol, self.density)?;
        if let Some(t) = self.theta_deg {
            write!(f, " theta={t}")?;
        }
        write!(f, " seed={}", self.seed)
    }
}

/// Density grids of the reference tables, used when none is given.
pub fn default_densities(scenario: Scenario) -> Vec<f64> {
    match scenario {
        Scenario::Ramp => vec![250.0, 750.0, 1500.0, 2000.0],
        Scenario::Intersection => vec![100.0, 250.0, 400.0, 550.0, 700.0],
        Scenario::Platoon => vec![250.0, 500.0, 1000.0, 1250.0, 1500.0],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenarios: Vec<Scenario>,
    pub protocols: Vec<ProtocolChoice>,
    pub custom_mhr_km: Option<f64>,
    pub custom_ipg_ms: Option<f64>,
    /// Empty means each scenario's default grid.
    pub densities: Vec<f64>,
    pub thetas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub horizon_s: Option<f64>,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub chart: bool,

    pub warmup_s: f64,
    pub merge_plan_decel: f64,
    pub n_vehicles: usize,
    pub box_side_m: f64,
    pub demand_vph: f64,
    pub lead_in_m: f64,
    pub n_platoon: usize,
    pub v_p_ms: f64,
    pub b_brake_ms2: f64,
    pub ivd_m: f64,
    pub failsafe: bool,
    pub relay: Relay,
}

impl ScenarioConfig {
    pub fn new(scenarios: Vec<Scenario>) -> Self {
        let ramp = RampConfig::new(ProtocolModel::Cv2x, 250.0, 1);
        let inter = IntersectionConfig::new(ProtocolModel::Cv2x, 250.0, 1);
        let platoon = PlatoonConfig::new(ProtocolModel::Cv2x, 250.0, 1);
        Self {
            scenarios,
            protocols: vec![ProtocolChoice::Cv2x, ProtocolChoice::Dsrc],
            custom_mhr_km: None,
            custom_ipg_ms: None,
            densities: Vec::new(),
            thetas: vec![ramp.geometry.theta_deg],
            seeds: vec![1],
            horizon_s: None,
            out_dir: PathBuf::from("out"),
            format: OutputFormat::Csv,
            chart: false,
            warmup_s: ramp.warmup_s,
            merge_plan_decel: ramp.merge_plan_decel,
            n_vehicles: inter.n_vehicles,
            box_side_m: inter.geometry.box_side_m,
            demand_vph: inter.demand_vph,
            lead_in_m: inter.geometry.lead_in_m,
            n_platoon: platoon.n,
            v_p_ms: platoon.v_p,
            b_brake_ms2: platoon.b_brake,
            ivd_m: platoon.ivd_m,
            failsafe: platoon.failsafe,
            relay: platoon.relay,
        }
    }

    /// Applies one `key = value` setting. Hyphens and underscores in keys are
    /// interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("bad value `{value}` for {key}: expected {what}"));
        let num = || value.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad("a number"));
        let count = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let nums = || -> Result<Vec<f64>> {
            split_list(value).map(|x| x.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad("a list of numbers"))).collect()
        };
        match key.as_str() {
            "scenario" => {
                self.scenarios =
                    split_list(value).map(|s| s.parse()).collect::<Result<_>>().map_err(|_| bad("ramp|intersection|platoon"))?
            }
            "protocol" => self.protocols = split_list(value).map(|s| s.parse()).collect::<Result<_>>()?,
            "custom_mhr_km" => self.custom_mhr_km = Some(num()?),
            "custom_ipg_ms" => self.custom_ipg_ms = Some(num()?),
            "density" | "density_vph" => self.densities = nums()?,
            "theta_deg" => self.thetas = nums()?,
            "seed" => {
                self.seeds = split_list(value).map(|s| s.parse::<u64>().map_err(|_| bad("a list of integers"))).collect::<Result<_>>()?
            }
            "horizon_s" => self.horizon_s = Some(num()?),
            "out" => self.out_dir = PathBuf::from(value),
            "format" => {
                self.format = match value.to_ascii_lowercase().as_str() {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    _ => return Err(bad("csv|json")),
                }
            }
            "chart" => self.chart = parse_bool(value).ok_or_else(|| bad("true|false"))?,
            "n_warmup_s" | "warmup_s" => self.warmup_s = num()?,
            "merge_plan_decel" => self.merge_plan_decel = num()?,
            "n_vehicles" => self.n_vehicles = count()?,
            "box_side_m" => self.box_side_m = num()?,
            "demand_vph" => self.demand_vph = num()?,
            "lead_in_m" => self.lead_in_m = num()?,
            "n_platoon" => self.n_platoon = count()?,
            "v_p_ms" => self.v_p_ms = num()?,
            "b_brake_ms2" => self.b_brake_ms2 = num()?,
            "ivd_m" => self.ivd_m = num()?,
            "failsafe" => self.failsafe = parse_bool(value).ok_or_else(|| bad("true|false"))?,
            "relay" => self.relay = value.parse().map_err(|_| bad("positional|broadcast"))?,
            _ => return Err(Error::Config(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    /// Applies every line of a `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("config line {}: expected key = value", i + 1)))?;
            self.set(k, v).map_err(|e| Error::Config(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    fn resolve_protocols(&self) -> Result<Vec<ProtocolModel>> {
        if self.protocols.is_empty() {
            return Err(Error::Config("no protocol selected".into()));
        }
        let mut out = Vec::new();
        for p in &self.protocols {
            let model = match p {
                ProtocolChoice::Cv2x => ProtocolModel::Cv2x,
                ProtocolChoice::Dsrc => ProtocolModel::Dsrc,
                ProtocolChoice::Custom => match (self.custom_mhr_km, self.custom_ipg_ms) {
                    (Some(m), Some(i)) => ProtocolModel::custom(m, i).map_err(|e| Error::Config(e.to_string()))?,
                    _ => return Err(Error::Config("custom protocol needs both custom_mhr_km and custom_ipg_ms".into())),
                },
            };
            if !out.contains(&model) {
                out.push(model);
            }
        }
        Ok(out)
    }

    /// Checks the settings and expands them into the ordered run grid.
    pub fn plan(&self) -> Result<Vec<RunSpec>> {
        if self.scenarios.is_empty() {
            return Err(Error::Config("no scenario selected".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.thetas.is_empty() {
            return Err(Error::Config("at least one merge angle is required".into()));
        }
        if let Some(d) = self.densities.iter().find(|d| **d <= 0.0) {
            return Err(Error::Config(format!("density must be > 0, got {d}")));
        }
        let protocols = self.resolve_protocols()?;
        let mut plan = Vec::new();
        for &scenario in &self.scenarios {
            let densities = if self.densities.is_empty() { default_densities(scenario) } else { self.densities.clone() };
            let thetas: Vec<Option<f64>> = match scenario {
                Scenario::Ramp => self.thetas.iter().copied().map(Some).collect(),
                _ => vec![None],
            };
            for &protocol in &protocols {
                for &density in &densities {
                    for &theta_deg in &thetas {
                        for &seed in &self.seeds {
                            plan.push(RunSpec { scenario, protocol, density, theta_deg, seed });
                        }
                    }
                }
            }
        }
        // Build every scenario config once so invalid knobs fail before any run.
        let mut seen = Vec::new();
        for spec in &plan {
            if !seen.contains(&spec.scenario) {
                seen.push(spec.scenario);
                self.check(spec)?;
            }
        }
        Ok(plan)
    }

    fn check(&self, spec: &RunSpec) -> Result<()> {
        match spec.scenario {
            Scenario::Ramp => self.ramp_config(spec).validate(),
            Scenario::Intersection => self.intersection_config(spec).validate(),
            Scenario::Platoon => self.platoon_config(spec).validate(),
        }
    }

    pub fn ramp_config(&self, spec: &RunSpec) -> RampConfig {
        let mut c = RampConfig::new(spec.protocol, spec.density, spec.seed);
        if let Some(t) = spec.theta_deg {
            c.geometry.theta_deg = t;
        }
        if let Some(h) = self.horizon_s {
            c.horizon_s = h;
        }
        c.warmup_s = self.warmup_s;
        c.merge_plan_decel = self.merge_plan_decel;
        c
    }

    pub fn intersection_config(&self, spec: &RunSpec) -> IntersectionConfig {
        let mut c = IntersectionConfig::new(spec.protocol, spec.density, spec.seed);
        if let Some(h) = self.horizon_s {
            c.horizon_s = h;
        }
        c.n_vehicles = self.n_vehicles;
        c.geometry.box_side_m = self.box_side_m;
        c.geometry.lead_in_m = self.lead_in_m;
        c.demand_vph = self.demand_vph;
        c
    }

    pub fn platoon_config(&self, spec: &RunSpec) -> PlatoonConfig {
        let mut c = PlatoonConfig::new(spec.protocol, spec.density, spec.seed);
        c.n = self.n_platoon;
        c.v_p = self.v_p_ms;
        c.b_brake = self.b_brake_ms2;
        c.ivd_m = self.ivd_m;
        c.failsafe = self.failsafe;
        c.relay = self.relay;
        c
    }

    /// Runs one plan entry.
    pub fn execute_run(&self, spec: &RunSpec) -> Result<MetricsRecord> {
        match spec.scenario {
            Scenario::Ramp => run_ramp(&self.ramp_config(spec)),
            Scenario::Intersection => run_intersection(&self.intersection_config(spec)),
            Scenario::Platoon => run_platoon(&self.platoon_config(spec)),
        }
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_bool(value: &str) -> Option<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}
