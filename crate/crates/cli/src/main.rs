//! `v2xcosim`: run ramp, intersection and platoon scenarios and sweeps.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use v2x_cosim::config::{OutputFormat, RunSpec, ScenarioConfig};
use v2x_cosim::metrics::{chart_metrics, summarize, write_chart, write_results, write_results_json, MetricsRecord, Scenario};
use v2x_cosim::Error;

const SEED_ENV: &str = "V2XCOSIM_SEED";

#[derive(Parser, Debug)]
#[command(name = "v2xcosim", version, about = "Deterministic traffic and V2X communication co-simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Angled on-ramp merge; reports mean ramp road time.
    Ramp(RunArgs),
    /// Reservation-managed four-way intersection; reports total time.
    Intersection(RunArgs),
    /// Platoon emergency brake; reports brake time and MIVD.
    Platoon(RunArgs),
    /// All three scenarios over the same grid.
    Sweep(RunArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Protocols to compare: cv2x, dsrc, custom (comma separated).
    #[arg(long)]
    protocol: Option<String>,
    /// Hearing range of the custom protocol, km.
    #[arg(long)]
    custom_mhr_km: Option<String>,
    /// Packet gap of the custom protocol, ms.
    #[arg(long)]
    custom_ipg_ms: Option<String>,
    /// Vehicle densities, veh/h (comma separated).
    #[arg(long)]
    density: Option<String>,
    /// Ramp merge angles, degrees (comma separated).
    #[arg(long)]
    theta_deg: Option<String>,
    /// Seeds (comma separated); defaults to $V2XCOSIM_SEED, then 1.
    #[arg(long)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Results format: csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Also write one SVG chart per scenario metric.
    #[arg(long)]
    chart: bool,
    /// key = value settings file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the run plan and exit.
    #[arg(long)]
    dry_run: bool,
    /// Runs to execute in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    horizon_s: Option<String>,
    /// Ramp: metric warm-up, s.
    #[arg(long)]
    warmup_s: Option<String>,
    /// Ramp: planning deceleration for unheard conflicts, m/s².
    #[arg(long)]
    merge_plan_decel: Option<String>,
    /// Intersection: vehicles per run.
    #[arg(long)]
    n_vehicles: Option<String>,
    /// Intersection: conflict box side, m.
    #[arg(long)]
    box_side_m: Option<String>,
    /// Intersection: arrival rate of the generated vehicles, veh/h.
    #[arg(long)]
    demand_vph: Option<String>,
    /// Intersection: spawn road upstream of each approach, m.
    #[arg(long)]
    lead_in_m: Option<String>,
    /// Platoon: number of trucks.
    #[arg(long)]
    n_platoon: Option<String>,
    /// Platoon: cruise speed, m/s.
    #[arg(long)]
    v_p_ms: Option<String>,
    /// Platoon: brake deceleration, m/s².
    #[arg(long)]
    b_brake_ms2: Option<String>,
    /// Platoon: cruise bumper gap, m.
    #[arg(long)]
    ivd_m: Option<String>,
    /// Platoon: Krauss fail-safe on or off.
    #[arg(long)]
    failsafe: Option<String>,
    /// Platoon: brake flag relay, positional or broadcast.
    #[arg(long)]
    relay: Option<String>,
}

impl RunArgs {
    fn settings(&self) -> Vec<(&'static str, &str)> {
        let pairs: [(&'static str, &Option<String>); 21] = [
            ("protocol", &self.protocol),
            ("custom_mhr_km", &self.custom_mhr_km),
            ("custom_ipg_ms", &self.custom_ipg_ms),
            ("density", &self.density),
            ("theta_deg", &self.theta_deg),
            ("seed", &self.seed),
            ("out", &self.out),
            ("format", &self.format),
            ("horizon_s", &self.horizon_s),
            ("warmup_s", &self.warmup_s),
            ("merge_plan_decel", &self.merge_plan_decel),
            ("n_vehicles", &self.n_vehicles),
            ("box_side_m", &self.box_side_m),
            ("demand_vph", &self.demand_vph),
            ("lead_in_m", &self.lead_in_m),
            ("n_platoon", &self.n_platoon),
            ("v_p_ms", &self.v_p_ms),
            ("b_brake_ms2", &self.b_brake_ms2),
            ("ivd_m", &self.ivd_m),
            ("failsafe", &self.failsafe),
            ("relay", &self.relay),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

/// Builds the run configuration: defaults, then the seed variable, then the
/// config file, then flags.
fn build_config(scenarios: Vec<Scenario>, args: &RunArgs) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::new(scenarios.clone());
    if let Ok(seed) = std::env::var(SEED_ENV) {
        cfg.set("seed", &seed).map_err(|e| Failure::Usage(format!("{SEED_ENV}: {e}")))?;
    }
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_file(&text)?;
        // The subcommand decides the scenarios, whatever the file says.
        cfg.scenarios = scenarios.clone();
    }
    for (k, v) in args.settings() {
        cfg.set(k, v)?;
    }
    if args.chart {
        cfg.chart = true;
    }
    if args.theta_deg.is_some() && !scenarios.contains(&Scenario::Ramp) {
        return Err(Failure::Usage("--theta-deg only applies to the ramp scenario".into()));
    }
    if args.jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    Ok(cfg)
}

fn run_plan(cfg: &ScenarioConfig, plan: &[RunSpec], jobs: usize) -> Result<Vec<MetricsRecord>, Failure> {
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| Failure::Io(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<MetricsRecord, Error>> = pool.install(|| plan.par_iter().map(|spec| cfg.execute_run(spec)).collect());
    results.into_iter().collect::<Result<_, _>>().map_err(Failure::from)
}

fn execute(scenarios: Vec<Scenario>, args: &RunArgs) -> Result<bool, Failure> {
    let cfg = build_config(scenarios, args)?;
    let plan = cfg.plan()?;
    if args.dry_run {
        println!("{} runs", plan.len());
        for spec in &plan {
            println!("{spec}");
        }
        return Ok(true);
    }
    let records = run_plan(&cfg, &plan, args.jobs)?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    let path = cfg.out_dir.join(format!("results.{}", cfg.format.extension()));
    match cfg.format {
        OutputFormat::Csv => write_results(&records, &path)?,
        OutputFormat::Json => write_results_json(&records, &path)?,
    }
    if cfg.chart {
        for &scenario in &cfg.scenarios {
            for &metric in chart_metrics(scenario) {
                match write_chart(&records, scenario, metric, &cfg.out_dir) {
                    Ok(_) => {}
                    Err(Error::Chart(msg)) => eprintln!("skipping chart: {msg}"),
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    print!("{}", summarize(&records));
    let flagged: Vec<&MetricsRecord> = records.iter().filter(|r| r.gridlock || r.fault).collect();
    for r in &flagged {
        let what = if r.fault { "fault" } else { "gridlock" };
        eprintln!("{what}: {} {} density={} seed={}", r.scenario, r.protocol, r.density, r.seed);
    }
    Ok(flagged.is_empty())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (scenarios, args) = match &cli.command {
        Command::Ramp(a) => (vec![Scenario::Ramp], a),
        Command::Intersection(a) => (vec![Scenario::Intersection], a),
        Command::Platoon(a) => (vec![Scenario::Platoon], a),
        Command::Sweep(a) => (Scenario::ALL.to_vec(), a),
    };
    match execute(scenarios, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
