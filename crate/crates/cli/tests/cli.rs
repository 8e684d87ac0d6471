use std::fs;
use std::process::{Command, Output};

fn v2xcosim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_v2xcosim")).args(args).env_remove("V2XCOSIM_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(v2xcosim(&["--help"]).status.code(), Some(0));
    assert_eq!(v2xcosim(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(v2xcosim(&["fly"]).status.code(), Some(1));
    assert_eq!(v2xcosim(&["ramp", "--density", "abc", "--dry-run"]).status.code(), Some(1));
    assert_eq!(v2xcosim(&["ramp", "--protocol", "wifi", "--dry-run"]).status.code(), Some(1));
    assert_eq!(v2xcosim(&["ramp", "--protocol", "custom", "--custom-mhr-km", "1", "--dry-run"]).status.code(), Some(1));
    assert_eq!(v2xcosim(&["ramp", "--jobs", "0", "--dry-run"]).status.code(), Some(1));
}

#[test]
fn theta_is_rejected_outside_ramp() {
    let o = v2xcosim(&["intersection", "--theta-deg", "48", "--dry-run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta"));
    assert_eq!(v2xcosim(&["platoon", "--theta-deg", "48", "--dry-run"]).status.code(), Some(1));
    assert_eq!(v2xcosim(&["ramp", "--theta-deg", "48", "--dry-run"]).status.code(), Some(0));
}

#[test]
fn dry_run_lists_the_sweep() {
    let o = v2xcosim(&["sweep", "--density", "250", "--seed", "1,2,3", "--dry-run"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("18 runs"), "{text}");
    assert_eq!(text.lines().count(), 19);
}

#[test]
fn seed_variable_is_overridden_by_flag() {
    let run = |env: Option<&str>, args: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_v2xcosim"));
        c.args(args).env_remove("V2XCOSIM_SEED");
        if let Some(s) = env {
            c.env("V2XCOSIM_SEED", s);
        }
        stdout(&c.output().unwrap())
    };
    let base = ["platoon", "--protocol", "cv2x", "--density", "250", "--dry-run"];
    assert!(run(Some("7"), &base).contains("seed=7"));
    let mut flagged = base.to_vec();
    flagged.extend(["--seed", "9"]);
    let text = run(Some("7"), &flagged);
    assert!(text.contains("seed=9") && !text.contains("seed=7"));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# platoon grid\nprotocol = dsrc\ndensity = 250, 500\nseed = 4\n").unwrap();
    let text = stdout(&v2xcosim(&["platoon", "--config", cfg.to_str().unwrap(), "--dry-run"]));
    assert!(text.starts_with("2 runs"), "{text}");
    assert!(text.contains("DSRC") && text.contains("seed=4"));
    let text = stdout(&v2xcosim(&["platoon", "--config", cfg.to_str().unwrap(), "--density", "1000", "--dry-run"]));
    assert!(text.starts_with("1 runs") && text.contains("density=1000"), "{text}");
    assert_eq!(v2xcosim(&["platoon", "--config", "/nonexistent/x.cfg", "--dry-run"]).status.code(), Some(1));
}

#[test]
fn platoon_run_writes_results_and_charts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = v2xcosim(&["platoon", "--density", "250,500", "--seed", "1", "--out", out, "--chart", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.starts_with("scenario,protocol,density,theta_deg,seed,metric_s,mivd_m,gridlock,fault"));
    assert_eq!(csv.lines().count(), 5);
    for chart in ["platoon_b_time.svg", "platoon_mivd.svg"] {
        let svg = fs::read_to_string(dir.path().join(chart)).unwrap();
        assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    }
    assert!(stdout(&o).contains("platoon"));
}

#[test]
fn json_output_and_parallel_runs_agree() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |out: &str, jobs: &str| {
        v2xcosim(&["platoon", "--density", "250,1000", "--seed", "1,2", "--format", "json", "--out", out, "--jobs", jobs])
    };
    assert_eq!(args(a.path().to_str().unwrap(), "1").status.code(), Some(0));
    assert_eq!(args(b.path().to_str().unwrap(), "4").status.code(), Some(0));
    let ja = fs::read_to_string(a.path().join("results.json")).unwrap();
    let jb = fs::read_to_string(b.path().join("results.json")).unwrap();
    assert_eq!(ja, jb);
    assert!(ja.trim_start().starts_with('['));
}

#[test]
fn single_density_chart_is_skipped_with_a_note() {
    let dir = tempfile::tempdir().unwrap();
    let o = v2xcosim(&["platoon", "--density", "250", "--seed", "1", "--out", dir.path().to_str().unwrap(), "--chart"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipping chart"));
    assert!(dir.path().join("results.csv").exists());
}

#[test]
fn deaf_intersection_reports_gridlock_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = v2xcosim(&[
        "intersection",
        "--protocol",
        "custom",
        "--custom-mhr-km",
        "0",
        "--custom-ipg-ms",
        "100",
        "--density",
        "100",
        "--seed",
        "1",
        "--horizon-s",
        "60",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gridlock"));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with("true,false"), "{csv}");
}
