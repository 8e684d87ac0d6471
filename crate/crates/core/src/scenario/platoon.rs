//! Truck platoon emergency brake on a straight road.
//!
//! The platoon cruises at a common speed with a fixed bumper-to-bumper gap
//! until the head vehicle brakes. The brake flag travels backwards on
//! beacons; a flagged vehicle brakes at the platoon brake deceleration. An
//! optional Krauss fail-safe against the sensed predecessor keeps unflagged
//! followers from running into a braking vehicle.

use std::fmt;
use std::str::FromStr;

use crate::comm::{BeaconSchedule, LinkParams, ProtocolModel};
use crate::error::{Error, Result};
use crate::metrics::{MetricsRecord, Scenario, VehicleDetail};
use crate::sim::{Kinematics, Lane, LeaderInfo, Purpose, RngStream, VehicleId, VehicleState, DT};

/// Bumper gap the fail-safe keeps at standstill, m.
const STANDSTILL_GAP_M: f64 = 1.0;
/// Fail-safe speeds below this are rounded to a stop, m/s.
const CREEP_MPS: f64 = 0.01;

/// Who may pass the brake flag on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Relay {
    /// Only the immediate predecessor's flagged beacon sets a vehicle's flag.
    #[default]
    Positional,
    /// Any flagged beacon within range sets the flag.
    Broadcast,
}

impl fmt::Display for Relay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relay::Positional => "positional",
            Relay::Broadcast => "broadcast",
        })
    }
}

impl FromStr for Relay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "positional" => Ok(Relay::Positional),
            "broadcast" => Ok(Relay::Broadcast),
            other => Err(Error::Parse(format!("unknown relay mode {other:?} (expected positional|broadcast)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonConfig {
    pub protocol: ProtocolModel,
    pub density_vph: f64,
    pub seed: u64,
    pub n: usize,
    pub veh_len_m: f64,
    pub ivd_m: f64,
    pub road_len_m: f64,
    pub v_p: f64,
    pub b_brake: f64,
    /// Cruise time before the head vehicle brakes, s.
    pub warmup_s: f64,
    pub failsafe: bool,
    /// Reaction time of the fail-safe follower law, s.
    pub failsafe_tau_s: f64,
    pub relay: Relay,
}

impl PlatoonConfig {
    pub fn new(protocol: ProtocolModel, density_vph: f64, seed: u64) -> Self {
        Self {
            protocol,
            density_vph,
            seed,
            n: 8,
            veh_len_m: 20.0,
            ivd_m: 10.0,
            road_len_m: 10_000.0,
            v_p: 14.0,
            b_brake: 4.5,
            warmup_s: 5.0,
            failsafe: true,
            failsafe_tau_s: 0.2,
            relay: Relay::Positional,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.protocol.params(self.density_vph)?;
        if self.n == 0 {
            return Err(Error::Config("platoon needs at least one vehicle".into()));
        }
        for (name, x) in [("ivd", self.ivd_m), ("v_p", self.v_p), ("b_brake", self.b_brake), ("vehicle length", self.veh_len_m)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {x}")));
            }
        }
        if !(self.warmup_s >= 0.0 && self.failsafe_tau_s >= DT) {
            return Err(Error::Config(format!("need warmup >= 0 and fail-safe tau >= {DT}")));
        }
        let length = self.n as f64 * self.veh_len_m + (self.n - 1) as f64 * self.ivd_m;
        let travel = self.v_p * self.warmup_s + self.v_p * self.v_p / (2.0 * self.b_brake);
        if length + travel >= self.road_len_m {
            return Err(Error::Config(format!("platoon of {length} m does not fit on a {} m road", self.road_len_m)));
        }
        Ok(())
    }

    fn kinematics(&self) -> Kinematics {
        Kinematics { a_max: 2.5, b_decel: self.b_brake, v_max: self.v_p, tau: self.failsafe_tau_s }
    }
}

/// Brake flags: `flags[i]` is the time vehicle `i` (0 = head) started braking.
pub type Flags = Vec<Option<f64>>;

/// One beacon exchange of the brake flag at `now`. `fires[i]` says whether
/// vehicle `i` transmits this step and `positions` are front positions along
/// the road. Beacons carry the flags as they stood before this exchange.
pub fn propagate_brake(flags: &mut Flags, fires: &[bool], positions: &[f64], mhr_m: f64, relay: Relay, now: f64) {
    let before = flags.clone();
    for i in 1..flags.len() {
        if flags[i].is_some() {
            continue;
        }
        let heard = |j: usize| fires[j] && before[j].is_some() && (positions[j] - positions[i]).abs() <= mhr_m;
        let set = match relay {
            Relay::Positional => heard(i - 1),
            Relay::Broadcast => (0..flags.len()).any(|j| j != i && heard(j)),
        };
        if set {
            flags[i] = Some(now);
        }
    }
}

/// Speed and position after one step of constant braking at `b`; the stop
/// instant within the step is resolved exactly. Returns `(v, ds, stop_at)`
/// where `stop_at` is the elapsed time within the step if the vehicle stopped.
pub fn brake_dynamics(v: f64, b: f64, dt: f64) -> (f64, f64, Option<f64>) {
    if v <= 0.0 {
        return (0.0, 0.0, None);
    }
    let v_new = v - b * dt;
    if v_new > 0.0 {
        (v_new, 0.5 * (v + v_new) * dt, None)
    } else {
        (0.0, v * v / (2.0 * b), Some(v / b))
    }
}

/// Closed-form outcome for brake start delays `delays` (head first) when
/// every vehicle brakes at `b` from `v_p` and nothing else intervenes.
pub fn brake_oracle(delays: &[f64], ivd: f64, v_p: f64, b: f64) -> (f64, Option<f64>) {
    let b_time = delays.last().copied().unwrap_or(0.0) + v_p / b;
    let mivd = delays.windows(2).map(|w| ivd - v_p * (w[1] - w[0])).reduce(f64::min);
    (b_time, mivd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrakeTimeline {
    pub brake_start: Vec<Option<f64>>,
    pub stop_time: Vec<Option<f64>>,
    pub stop_position: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PlatoonSim {
    config: PlatoonConfig,
    link: LinkParams,
    step: u64,
    t0: f64,
    trucks: Vec<VehicleState>,
    schedules: Vec<BeaconSchedule>,
    flags: Flags,
    stop_time: Vec<Option<f64>>,
    pos_at_t0: Vec<f64>,
    min_gap: f64,
    fault: bool,
}

impl PlatoonSim {
    pub fn new(config: PlatoonConfig) -> Result<Self> {
        config.validate()?;
        let link = config.protocol.params(config.density_vph)?;
        let rng = RngStream::new(config.seed);
        let k = config.kinematics();
        let spacing = config.veh_len_m + config.ivd_m;
        let head_s = config.n as f64 * config.veh_len_m + (config.n - 1) as f64 * config.ivd_m;
        let mut trucks = Vec::with_capacity(config.n);
        let mut schedules = Vec::with_capacity(config.n);
        for i in 0..config.n {
            let mut st = VehicleState::new(VehicleId(i as u32), Lane::Platoon, config.veh_len_m, 0.0, k);
            st.s = head_s - i as f64 * spacing;
            st.v = config.v_p;
            trucks.push(st);
            let mut phase = rng.substream(Purpose::BeaconPhase(i as u32));
            schedules.push(BeaconSchedule::random(0.0, link.ipg_ms, &mut phase, DT)?);
        }
        let n = config.n;
        let t0 = crate::sim::step_at_or_after(config.warmup_s, DT) as f64 * DT;
        Ok(Self {
            config,
            link,
            step: 0,
            t0,
            trucks,
            schedules,
            flags: vec![None; n],
            stop_time: vec![None; n],
            pos_at_t0: vec![0.0; n],
            min_gap: f64::INFINITY,
            fault: false,
        })
    }

    pub fn t(&self) -> f64 {
        self.step as f64 * DT
    }

    pub fn link(&self) -> LinkParams {
        self.link
    }

    pub fn trucks(&self) -> &[VehicleState] {
        &self.trucks
    }

    /// Brake start delays after the head brakes, head first.
    pub fn delays(&self) -> Vec<Option<f64>> {
        self.flags.iter().map(|f| f.map(|t| t - self.t0)).collect()
    }

    pub fn step(&mut self) {
        let now = self.t();
        let step = self.step;
        if self.flags[0].is_none() && now >= self.t0 - 1e-9 {
            self.flags[0] = Some(now);
            self.pos_at_t0 = self.trucks.iter().map(|t| t.s).collect();
        }
        let fires: Vec<bool> = self.schedules.iter_mut().map(|s| s.fire(step)).collect();
        let positions: Vec<f64> = self.trucks.iter().map(|t| t.s).collect();
        propagate_brake(&mut self.flags, &fires, &positions, self.link.mhr_m(), self.config.relay, now);

        let c = &self.config;
        let mut next = Vec::with_capacity(self.trucks.len());
        for (i, truck) in self.trucks.iter().enumerate() {
            let failsafe = (i > 0 && c.failsafe).then(|| {
                let pred = &self.trucks[i - 1];
                let gap = (pred.s - pred.length - truck.s - STANDSTILL_GAP_M).max(0.0);
                let v = truck.safe_speed_behind(LeaderInfo { v: pred.v, gap });
                if v < CREEP_MPS {
                    0.0
                } else {
                    v
                }
            });
            if self.flags[i].is_some() {
                let (v, ds, stop) = brake_dynamics(truck.v, c.b_brake, DT);
                match failsafe {
                    Some(v_fs) if v_fs < v => next.push((v_fs, v_fs * DT, None)),
                    _ => next.push((v, ds, stop)),
                }
            } else {
                // CACC holds the cruise; the fail-safe may only slow it.
                let v = failsafe.map_or(c.v_p, |v_fs| truck.next_speed(v_fs, c.v_p, DT));
                next.push((v, v * DT, None));
            }
        }
        for (i, (v, ds, stop)) in next.into_iter().enumerate() {
            let truck = &mut self.trucks[i];
            let was_moving = truck.v > 0.0;
            truck.v = v;
            truck.s += ds;
            if self.stop_time[i].is_none() && was_moving && v == 0.0 {
                self.stop_time[i] = Some(now + stop.unwrap_or(DT));
            }
        }
        for w in self.trucks.windows(2) {
            let gap = w[0].s - w[0].length - w[1].s;
            self.min_gap = self.min_gap.min(gap);
            if gap <= 0.0 {
                self.fault = true;
            }
        }
        self.step += 1;
    }

    fn stopped(&self) -> bool {
        self.trucks.iter().all(|t| t.v == 0.0)
    }

    pub fn run(mut self) -> Result<(MetricsRecord, BrakeTimeline)> {
        // Generous bound: every hop at most one packet gap plus the stop itself.
        let limit = self.t0 + self.config.v_p / self.config.b_brake * 4.0 + self.config.n as f64 * (self.link.ipg_s() + DT) + 60.0;
        while !self.stopped() && self.t() < limit {
            self.step();
        }
        Ok(self.finish())
    }

    fn finish(&self) -> (MetricsRecord, BrakeTimeline) {
        let c = &self.config;
        let mut rec = MetricsRecord::new(Scenario::Platoon, c.protocol, c.density_vph, c.seed);
        let stopped = self.stopped();
        let stop_time = self.stop_time.clone();
        let last_stop = stop_time.iter().flatten().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        rec.gridlock = !stopped;
        rec.fault = self.fault;
        rec.metric_s = if stopped { last_stop - self.t0 } else { 0.0 };
        rec.mivd_m = self.trucks.windows(2).map(|w| w[0].s - w[0].length - w[1].s).reduce(f64::min);
        let tail = self.trucks.len() - 1;
        rec.extras = vec![
            ("brake_distance_m".into(), self.trucks[tail].s - self.pos_at_t0[tail]),
            ("min_gap_during_m".into(), self.min_gap.min(c.ivd_m)),
        ];
        for (i, d) in self.delays().iter().enumerate() {
            rec.extras.push((format!("delay_{i}_s"), d.unwrap_or(f64::NAN)));
            rec.vehicles.push(VehicleDetail {
                id: i as u32,
                origin: if i == 0 { "head".into() } else { format!("follower_{i}") },
                start_s: self.flags[i].unwrap_or(f64::NAN),
                finish_s: stop_time[i],
                value_s: stop_time[i].map(|s| s - self.t0),
            });
        }
        let timeline =
            BrakeTimeline { brake_start: self.flags.clone(), stop_time, stop_position: self.trucks.iter().map(|t| t.s).collect() };
        (rec, timeline)
    }
}

/// Runs one platoon brake simulation.
pub fn run_platoon(config: &PlatoonConfig) -> Result<MetricsRecord> {
    Ok(PlatoonSim::new(config.clone())?.run()?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn head_alone_stops_in_closed_form() {
        let mut cfg = PlatoonConfig::new(ProtocolModel::Cv2x, 250.0, 1);
        cfg.n = 1;
        let sim = PlatoonSim::new(cfg).unwrap();
        let s0 = sim.trucks()[0].s;
        let t0 = sim.t0;
        let (rec, tl) = sim.run().unwrap();
        assert!((rec.metric_s - 14.0 / 4.5).abs() < 1e-9, "{}", rec.metric_s);
        assert!(rec.mivd_m.is_none());
        let travelled = tl.stop_position[0] - s0 - 14.0 * t0;
        assert!((travelled - 14.0 * 14.0 / 9.0).abs() < 1e-9, "{travelled}");
        assert!((14.0f64 * 14.0 / 9.0 - 21.78).abs() < 0.01);
    }

    #[test]
    fn brake_dynamics_partial_step() {
        let (v, ds, stop) = brake_dynamics(0.3, 4.5, 0.1);
        assert_eq!(v, 0.0);
        assert!((ds - 0.01).abs() < 1e-12);
        assert!((stop.unwrap() - 0.3 / 4.5).abs() < 1e-12);
        let (v, ds, stop) = brake_dynamics(14.0, 4.5, 0.1);
        assert!((v - 13.55).abs() < 1e-12 && (ds - 1.3775).abs() < 1e-12 && stop.is_none());
    }

    #[test]
    fn propagation_examples() {
        // One hop in range.
        let mut flags = vec![Some(0.0), None];
        propagate_brake(&mut flags, &[true, false], &[100.0, 70.0], 200.0, Relay::Positional, 0.1);
        assert_eq!(flags[1], Some(0.1));
        // Too short a range: nothing moves.
        let mut flags = vec![Some(0.0), None, None];
        propagate_brake(&mut flags, &[true, true, true], &[100.0, 70.0, 40.0], 10.0, Relay::Broadcast, 0.1);
        assert_eq!(flags, vec![Some(0.0), None, None]);
        // All in range, broadcast: one reception flags everyone.
        let mut flags = vec![Some(0.0), None, None, None, None];
        propagate_brake(&mut flags, &[true, false, false, false, false], &[120.0, 90.0, 60.0, 30.0, 0.0], 250.0, Relay::Broadcast, 0.2);
        assert!(flags.iter().all(|f| f.is_some()));
        // Positional: only the next one, and only from this step's state.
        let mut flags = vec![Some(0.0), None, None];
        propagate_brake(&mut flags, &[true, true, true], &[60.0, 30.0, 0.0], 250.0, Relay::Positional, 0.2);
        assert_eq!(flags, vec![Some(0.0), Some(0.2), None]);
    }

    #[test]
    fn instantaneous_flags_keep_every_gap() {
        let (b_time, mivd) = brake_oracle(&[0.0; 5], 10.0, 14.0, 4.5);
        assert_eq!(mivd, Some(10.0));
        assert!((b_time - 14.0 / 4.5).abs() < 1e-12);
    }

    #[test]
    fn deaf_followers_stop_on_failsafe() {
        let cfg = PlatoonConfig::new(ProtocolModel::custom(0.01, 100.0).unwrap(), 250.0, 2);
        let (rec, tl) = PlatoonSim::new(cfg).unwrap().run().unwrap();
        assert!(!rec.fault && !rec.gridlock);
        assert!(tl.brake_start[1..].iter().all(|f| f.is_none()));
        assert!(rec.mivd_m.unwrap() > 0.0);
    }

    #[test]
    fn relay_mode_parses() {
        assert_eq!("Broadcast".parse::<Relay>().unwrap(), Relay::Broadcast);
        assert!("mesh".parse::<Relay>().is_err());
        assert_eq!(Relay::default().to_string(), "positional");
    }
}
