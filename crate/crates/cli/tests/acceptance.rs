//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use v2x_cosim::comm::ProtocolModel;
use v2x_cosim::metrics::MetricsRecord;
use v2x_cosim::scenario::platoon::brake_oracle;
use v2x_cosim::scenario::{run_intersection, run_platoon, run_ramp, IntersectionConfig, PlatoonConfig, PlatoonSim, RampConfig};
use v2x_cosim::sim::{desired_speed, safe_velocity, step_vehicle, Kinematics, Lane, LeaderInfo, VehicleId, VehicleState, DT};

const SEEDS: std::ops::RangeInclusive<u64> = 1..=10;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn ramp_mean(p: ProtocolModel, density: f64, theta: f64) -> f64 {
    let times: Vec<f64> = SEEDS.map(|s| run_ramp(&RampConfig::new(p, density, s).with_theta(theta)).unwrap().metric_s).collect();
    mean(&times)
}

fn intersection_runs(p: ProtocolModel, density: f64) -> Vec<MetricsRecord> {
    SEEDS.map(|s| run_intersection(&IntersectionConfig::new(p, density, s)).unwrap()).collect()
}

fn spe_star() -> ProtocolModel {
    ProtocolModel::custom(0.010, 1000.0).unwrap()
}

fn c1_protocol_fits() -> Verdict {
    use ProtocolModel::{Cv2x, Dsrc};
    // (protocol, density, printed mhr, decimals printed, printed ipg)
    let table1 = [
        (Cv2x, 250.0, 0.200, 100.0),
        (Cv2x, 750.0, 0.066, 100.0),
        (Cv2x, 1500.0, 0.033, 100.0),
        (Cv2x, 2000.0, 0.025, 100.0),
        (Dsrc, 250.0, 0.250, 125.0),
        (Dsrc, 750.0, 0.250, 375.0),
        (Dsrc, 1500.0, 0.250, 750.0),
        (Dsrc, 2000.0, 0.250, 1000.0),
    ];
    let table2 = [
        (Cv2x, 700.0, 0.07),
        (Cv2x, 550.0, 0.09),
        (Cv2x, 400.0, 0.13),
        (Cv2x, 250.0, 0.20),
        (Cv2x, 100.0, 0.50),
        (Dsrc, 700.0, 0.25),
        (Dsrc, 550.0, 0.25),
        (Dsrc, 400.0, 0.25),
        (Dsrc, 250.0, 0.25),
        (Dsrc, 100.0, 0.50),
    ];
    let mut misses = Vec::new();
    // Printed values carry rounding of half a unit in the last place on top
    // of the stated tolerance.
    for (p, rho, mhr, ipg) in table1 {
        let got = p.params(rho).unwrap();
        if (got.mhr_km - mhr).abs() > 0.001 + 0.0005 + 1e-12 || (got.ipg_ms - ipg).abs() > 1.0 {
            misses.push(format!("{p}@{rho}: ({:.4}, {}) vs ({mhr}, {ipg})", got.mhr_km, got.ipg_ms));
        }
    }
    for (p, rho, mhr) in table2 {
        let got = p.params(rho).unwrap();
        if (got.mhr_km - mhr).abs() > 0.001 + 0.005 + 1e-12 {
            misses.push(format!("{p}@{rho}: {:.4} vs {mhr}", got.mhr_km));
        }
    }
    verdict(misses.is_empty(), if misses.is_empty() { "18/18 rows".into() } else { misses.join("; ") })
}

fn c2_ramp_anchor() -> Verdict {
    let c = ramp_mean(ProtocolModel::Cv2x, 250.0, 24.0);
    let d = ramp_mean(ProtocolModel::Dsrc, 250.0, 24.0);
    let ok = (9.0..=15.0).contains(&c) && (9.0..=15.0).contains(&d);
    verdict(ok, format!("CV2X {c:.2} s, DSRC {d:.2} s"))
}

fn c3_ramp_crossover() -> Verdict {
    let lo = [ramp_mean(ProtocolModel::Cv2x, 250.0, 24.0), ramp_mean(ProtocolModel::Dsrc, 250.0, 24.0)];
    let c = ramp_mean(ProtocolModel::Cv2x, 2000.0, 24.0);
    let d = ramp_mean(ProtocolModel::Dsrc, 2000.0, 24.0);
    let floor = 2.0 * lo[0].max(lo[1]);
    let ok = c < d && c.min(d) >= floor;
    verdict(ok, format!("@2000 CV2X {c:.2} < DSRC {d:.2}; 2x low-density max {floor:.2}"))
}

fn c4_spe_dominance() -> Verdict {
    let s = ramp_mean(spe_star(), 2000.0, 24.0);
    let c = ramp_mean(ProtocolModel::Cv2x, 2000.0, 24.0);
    let d = ramp_mean(ProtocolModel::Dsrc, 2000.0, 24.0);
    verdict(s > c && s > d, format!("SPE* {s:.2} vs CV2X {c:.2}, DSRC {d:.2}"))
}

fn c5_angle_trend() -> Verdict {
    let m: Vec<f64> = [24.0, 48.0, 72.0].iter().map(|&a| ramp_mean(ProtocolModel::Cv2x, 1500.0, a)).collect();
    let ok = m[0] <= m[1] && m[1] <= m[2] && m[0] < m[2];
    verdict(ok, format!("24/48/72 deg: {:.2} / {:.2} / {:.2}", m[0], m[1], m[2]))
}

struct IntersectionGrid {
    cv2x: Vec<Vec<MetricsRecord>>,
    dsrc: Vec<Vec<MetricsRecord>>,
}

const INT_DENSITIES: [f64; 5] = [100.0, 250.0, 400.0, 550.0, 700.0];

fn intersection_grid() -> IntersectionGrid {
    IntersectionGrid {
        cv2x: INT_DENSITIES.iter().map(|&d| intersection_runs(ProtocolModel::Cv2x, d)).collect(),
        dsrc: INT_DENSITIES.iter().map(|&d| intersection_runs(ProtocolModel::Dsrc, d)).collect(),
    }
}

fn metric_means(runs: &[Vec<MetricsRecord>]) -> Vec<f64> {
    runs.iter().map(|rs| mean(&rs.iter().map(|r| r.metric_s).collect::<Vec<_>>())).collect()
}

fn c6_equivalence(g: &IntersectionGrid) -> Verdict {
    let same = g.cv2x[0].iter().zip(&g.dsrc[0]).all(|(a, b)| a.metric_s.to_bits() == b.metric_s.to_bits());
    verdict(same, format!("{} seeds, CV2X mean {:.4} s", g.cv2x[0].len(), metric_means(&g.cv2x)[0]))
}

fn c7_crossover(g: &IntersectionGrid) -> Verdict {
    let c = metric_means(&g.cv2x);
    let d = metric_means(&g.dsrc);
    let faster = (2..5).all(|i| d[i] < c[i]);
    let never_slower = (2..5).all(|i| g.dsrc[i].iter().zip(&g.cv2x[i]).all(|(a, b)| a.metric_s <= b.metric_s));
    let nondecreasing = |m: &[f64]| m.windows(2).all(|w| w[1] >= w[0]);
    let ok = faster && never_slower && nondecreasing(&c) && nondecreasing(&d);
    let fmt = |m: &[f64]| m.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join("/");
    verdict(ok, format!("means CV2X {} | DSRC {}", fmt(&c), fmt(&d)))
}

fn c8_safety(g: &IntersectionGrid) -> Verdict {
    let all: Vec<&MetricsRecord> = g.cv2x.iter().chain(&g.dsrc).flatten().collect();
    let shared: f64 = all.iter().map(|r| r.extra("co_occupancy_steps").unwrap_or(f64::NAN)).sum();
    let gridlocked = all.iter().filter(|r| r.gridlock).count();
    verdict(shared == 0.0 && gridlocked == 0, format!("{} runs, {shared} shared-box steps, {gridlocked} gridlocked", all.len()))
}

fn c9_platoon_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_b: f64 = 0.0;
    let mut worst_m: f64 = 0.0;
    let mut ok = true;
    let cases = 25;
    for _ in 0..cases {
        let protocol = match rng.random_range(0..3) {
            0 => ProtocolModel::Cv2x,
            1 => ProtocolModel::Dsrc,
            _ => ProtocolModel::custom(rng.random_range(0.03..0.5), rng.random_range(50.0..1500.0)).unwrap(),
        };
        let density = [250.0, 500.0, 1000.0, 1250.0, 1500.0][rng.random_range(0..5)];
        let mut cfg = PlatoonConfig::new(protocol, density, rng.random());
        cfg.n = rng.random_range(2..=14);
        cfg.v_p = rng.random_range(5.0..30.0);
        cfg.failsafe = false;
        let mut sim = PlatoonSim::new(cfg.clone()).unwrap();
        let (rec, _) = sim.clone().run().unwrap();
        while sim.trucks().iter().any(|t| t.v > 0.0) {
            sim.step();
        }
        let Some(delays) = sim.delays().into_iter().collect::<Option<Vec<f64>>>() else {
            ok = false;
            continue;
        };
        let (b_time, mivd) = brake_oracle(&delays, cfg.ivd_m, cfg.v_p, cfg.b_brake);
        let db = (rec.metric_s - b_time).abs();
        let dm = (rec.mivd_m.unwrap() - mivd.unwrap()).abs();
        worst_b = worst_b.max(db / DT);
        worst_m = worst_m.max(dm / (cfg.v_p * DT));
        ok &= db <= 2.0 * DT && dm <= cfg.v_p * DT;
    }
    verdict(ok, format!("{cases} cases; worst b_time error {worst_b:.3} dt, worst MIVD error {worst_m:.3} v_p*dt"))
}

fn c10_platoon_trends() -> Verdict {
    let grid = [250.0, 500.0, 1000.0, 1250.0, 1500.0];
    let means = |p: ProtocolModel| -> (Vec<f64>, Vec<f64>) {
        grid.iter()
            .map(|&d| {
                let recs: Vec<MetricsRecord> = SEEDS.map(|s| run_platoon(&PlatoonConfig::new(p, d, s)).unwrap()).collect();
                (
                    mean(&recs.iter().map(|r| r.metric_s).collect::<Vec<_>>()),
                    mean(&recs.iter().map(|r| r.mivd_m.unwrap()).collect::<Vec<_>>()),
                )
            })
            .unzip()
    };
    let (cb, cm) = means(ProtocolModel::Cv2x);
    let (db, dm) = means(ProtocolModel::Dsrc);
    let faster = cb.iter().zip(&db).all(|(c, d)| c < d);
    let shrinking = dm.windows(2).all(|w| w[1] < w[0]);
    let spread = cm.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - cm.iter().cloned().fold(f64::INFINITY, f64::min);
    let fmt = |m: &[f64]| m.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join("/");
    verdict(
        faster && shrinking && spread < 0.5,
        format!("b_time CV2X {} DSRC {}; MIVD DSRC {}; CV2X MIVD range {spread:.3} m", fmt(&cb), fmt(&db), fmt(&dm)),
    )
}

fn cli_sweep(out: &Path) -> (bool, Duration) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_v2xcosim"))
        .args(["sweep", "--seed", "1,2,3,4,5,6,7,8,9,10", "--chart", "--out"])
        .arg(out)
        .env_remove("V2XCOSIM_SEED")
        .output()
        .expect("binary runs");
    (status.status.success(), start.elapsed())
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn c11_determinism() -> Verdict {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ok_a, t_a) = cli_sweep(a.path());
    let (ok_b, t_b) = cli_sweep(b.path());
    let fa = dir_bytes(a.path());
    let fb = dir_bytes(b.path());
    let charts = fa.iter().filter(|(n, _)| n.ends_with(".svg")).count();
    let ok = ok_a && ok_b && fa == fb && charts == 4 && fa.iter().any(|(n, _)| n == "results.csv");
    let slowest = t_a.max(t_b);
    verdict(
        ok && slowest < Duration::from_secs(60),
        format!("{} files ({charts} charts) identical: {}; full sweep {:.1} s", fa.len(), fa == fb, slowest.as_secs_f64()),
    )
}

fn close(got: f64, want: f64) -> bool {
    if want == 0.0 {
        got == 0.0
    } else {
        ((got - want) / want).abs() <= 1e-9
    }
}

fn c12_krauss() -> Verdict {
    let examples = [
        close(safe_velocity(10.0, 10.0, 1.0, 4.5, 10.0).unwrap(), 10.0),
        close(safe_velocity(0.0, 0.0, 1.0, 4.5, 0.0).unwrap(), 0.0),
        close(safe_velocity(10.0, 20.0, 1.0, 4.5, 10.0).unwrap(), 380.0 / 29.0),
        close(desired_speed(5.0, 10.0, 2.0, 30.0, DT).unwrap(), 5.0),
        close(desired_speed(100.0, 29.9, 2.0, 30.0, DT).unwrap(), 30.0),
        close(desired_speed(13.103, 10.0, 2.5, 30.0, 1.0).unwrap(), 12.5),
    ];
    let examples_ok = examples.iter().all(|&b| b);

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut steps = 0u64;
    let mut min_gap = f64::INFINITY;
    while steps < 1_000_000 {
        let k = Kinematics {
            a_max: rng.random_range(0.5..3.0),
            b_decel: rng.random_range(2.0..8.0),
            v_max: rng.random_range(5.0..35.0),
            tau: rng.random_range(DT..2.0),
        };
        let mut f = VehicleState::new(VehicleId(1), Lane::Mainline, 5.0, 0.0, k);
        f.v = rng.random_range(0.0..k.v_max);
        let mut leader_s = 5.0 + rng.random_range(0.01..60.0);
        let mut leader_v: f64 = rng.random_range(0.0..k.v_max);
        for _ in 0..1000 {
            let gap = leader_s - 5.0 - f.s;
            f = step_vehicle(&f, Some(LeaderInfo { v: leader_v, gap }), DT);
            leader_v = (leader_v + rng.random_range(-k.b_decel..k.a_max) * DT).clamp(0.0, k.v_max);
            leader_s += leader_v * DT;
            min_gap = min_gap.min(leader_s - 5.0 - f.s);
            steps += 1;
        }
    }
    verdict(
        examples_ok && min_gap > 0.0,
        format!("{}/6 examples; {steps} following steps, min gap {min_gap:.3e} m", examples.iter().filter(|&&b| b).count()),
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn main() -> ExitCode {
    let grid = intersection_grid();
    let criteria: Vec<Criterion> = vec![
        ("protocol-fit exactness", Box::new(c1_protocol_fits)),
        ("ramp low-density anchor", Box::new(c2_ramp_anchor)),
        ("ramp crossover trend", Box::new(c3_ramp_crossover)),
        ("SPE* dominance", Box::new(c4_spe_dominance)),
        ("angle monotonicity", Box::new(c5_angle_trend)),
        ("intersection equivalence point", Box::new(|| c6_equivalence(&grid))),
        ("intersection crossover", Box::new(|| c7_crossover(&grid))),
        ("intersection safety/liveness", Box::new(|| c8_safety(&grid))),
        ("platoon oracle equivalence", Box::new(c9_platoon_oracle)),
        ("platoon trends", Box::new(c10_platoon_trends)),
        ("end-to-end determinism", Box::new(c11_determinism)),
        ("Krauss unit suite", Box::new(c12_krauss)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!("{} criterion {:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
