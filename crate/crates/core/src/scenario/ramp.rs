//! Angled on-ramp merging onto a single-lane mainline.
//!
//! Both legs are 100 m long and meet at the merge point; the merged road
//! continues for 150 m. Every pre-merge vehicle is projected onto the
//! mainline axis by its distance to the merge point, which gives one total
//! order over both legs. A vehicle follows its same-leg leader by sensing
//! and its nearest virtual predecessor on the other leg only through
//! beacons. Road time is measured for ramp vehicles from their scheduled
//! arrival at the ramp entry (including any wait to enter) until their front
//! crosses the merge point.

use std::collections::VecDeque;

use crate::comm::{braking_bound, deliver, Beacon, BeaconSchedule, BeaconTable, LinkParams, Point, ProtocolModel, Snapshot};
use crate::error::{Error, Result};
use crate::metrics::{MetricsRecord, Scenario, VehicleDetail};
use crate::sim::{safe_velocity, spawn_arrivals, Kinematics, Lane, LeaderInfo, Purpose, RngStream, VehicleId, VehicleState, DT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampGeometry {
    /// Mainline length before the merge point, m.
    pub mainline_pre_m: f64,
    /// Merged road length after the merge point, m.
    pub post_merge_m: f64,
    pub ramp_len_m: f64,
    /// Angle between ramp and mainline, degrees.
    pub theta_deg: f64,
}

impl Default for RampGeometry {
    fn default() -> Self {
        Self { mainline_pre_m: 100.0, post_merge_m: 150.0, ramp_len_m: 100.0, theta_deg: 24.0 }
    }
}

impl RampGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_deg > 0.0 && self.theta_deg < 90.0) {
            return Err(Error::Config(format!("merge angle must be in (0, 90) degrees, got {}", self.theta_deg)));
        }
        for (name, len) in
            [("mainline length", self.mainline_pre_m), ("post-merge length", self.post_merge_m), ("ramp length", self.ramp_len_m)]
        {
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {len}")));
            }
        }
        Ok(())
    }

    fn leg_len(&self, leg: Leg) -> f64 {
        match leg {
            Leg::Mainline => self.mainline_pre_m,
            Leg::Ramp => self.ramp_len_m,
        }
    }

    /// Planar position with the merge point at the origin and the mainline
    /// along +x. `x` is the virtual mainline coordinate.
    fn position(&self, leg: Leg, x: f64) -> Point {
        if x >= 0.0 || leg == Leg::Mainline {
            return Point::new(x, 0.0);
        }
        let d = -x;
        let th = self.theta_deg.to_radians();
        Point::new(-d * th.cos(), -d * th.sin())
    }
}

/// Straight-line distance between a mainline vehicle `d_m` metres before the
/// merge point and a ramp vehicle `d_r` metres before it.
pub fn ramp_euclid(d_m: f64, d_r: f64, theta_deg: f64) -> f64 {
    let c = theta_deg.to_radians().cos();
    (d_m * d_m + d_r * d_r - 2.0 * d_m * d_r * c).max(0.0).sqrt()
}

/// Virtual mainline coordinate of a ramp vehicle `d_r` metres before the
/// merge point (merge point at zero, downstream positive).
pub fn project_ramp(d_r: f64) -> f64 {
    -d_r
}

/// Whether `a` is ahead of `b` in the virtual order; equal coordinates go to
/// the lower vehicle id.
pub fn virtually_ahead(x_a: f64, id_a: VehicleId, x_b: f64, id_b: VehicleId) -> bool {
    x_a > x_b || (x_a == x_b && id_a < id_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Leg {
    Mainline,
    Ramp,
}

impl Leg {
    fn other(self) -> Leg {
        match self {
            Leg::Mainline => Leg::Ramp,
            Leg::Ramp => Leg::Mainline,
        }
    }

    fn lane(self) -> Lane {
        match self {
            Leg::Mainline => Lane::Mainline,
            Leg::Ramp => Lane::Ramp,
        }
    }

    fn index(self) -> u32 {
        match self {
            Leg::Mainline => 0,
            Leg::Ramp => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RampConfig {
    pub geometry: RampGeometry,
    pub protocol: ProtocolModel,
    pub density_vph: f64,
    pub seed: u64,
    /// Arrivals are generated over `[0, horizon_s)`.
    pub horizon_s: f64,
    /// Ramp vehicles arriving before this are excluded from the metric.
    pub warmup_s: f64,
    /// Extra time allowed after the horizon for the network to empty.
    pub drain_s: f64,
    pub kinematics: Kinematics,
    pub vehicle_len_m: f64,
    /// Deceleration used when planning to hold short of the merge point for
    /// an unheard conflicting vehicle, m/s².
    pub merge_plan_decel: f64,
    /// Minimum free space at a leg entry before the next vehicle is inserted, m.
    pub min_insert_gap_m: f64,
}

impl RampConfig {
    pub fn new(protocol: ProtocolModel, density_vph: f64, seed: u64) -> Self {
        Self {
            geometry: RampGeometry::default(),
            protocol,
            density_vph,
            seed,
            horizon_s: 600.0,
            warmup_s: 60.0,
            drain_s: 900.0,
            kinematics: Kinematics::ROAD,
            vehicle_len_m: 5.0,
            merge_plan_decel: 0.2,
            min_insert_gap_m: 2.5,
        }
    }

    pub fn with_theta(mut self, theta_deg: f64) -> Self {
        self.geometry.theta_deg = theta_deg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.protocol.params(self.density_vph)?;
        if !(self.horizon_s > 0.0 && self.warmup_s >= 0.0 && self.warmup_s < self.horizon_s && self.drain_s >= 0.0) {
            return Err(Error::Config("need horizon > warmup >= 0 and drain >= 0".into()));
        }
        if !(self.merge_plan_decel > 0.0 && self.vehicle_len_m > 0.0 && self.min_insert_gap_m >= 0.0) {
            return Err(Error::Config("merge decel and vehicle length must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Car {
    state: VehicleState,
    leg: Leg,
    arrival: f64,
    inserted: f64,
    merged_at: Option<f64>,
    done: bool,
    schedule: BeaconSchedule,
    table: BeaconTable,
}

/// Stepwise ramp-merge simulation.
#[derive(Debug, Clone)]
pub struct RampSim {
    config: RampConfig,
    link: LinkParams,
    rng: RngStream,
    step: u64,
    cars: Vec<Car>,
    pending: [VecDeque<(VehicleId, f64)>; 2],
    next_id: u32,
    fault: bool,
    blind_steps: u64,
}

impl RampSim {
    /// Simulation with the configured Poisson demand split evenly across the
    /// two legs.
    pub fn new(config: RampConfig) -> Result<Self> {
        let mut sim = Self::empty(config)?;
        let per_leg = sim.config.density_vph / 2.0;
        let mut arrivals = Vec::new();
        for leg in [Leg::Mainline, Leg::Ramp] {
            let mut rng = sim.rng.substream(Purpose::Arrivals(leg.index()));
            for t in spawn_arrivals(per_leg, sim.config.horizon_s, &mut rng)? {
                arrivals.push((t, leg));
            }
        }
        arrivals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (t, leg) in arrivals {
            let id = VehicleId(sim.next_id);
            sim.next_id += 1;
            sim.pending[leg.index() as usize].push_back((id, t));
        }
        Ok(sim)
    }

    /// Simulation without generated demand; vehicles are added with [`RampSim::place`].
    pub fn empty(config: RampConfig) -> Result<Self> {
        config.validate()?;
        let link = config.protocol.params(config.density_vph)?;
        let rng = RngStream::new(config.seed);
        Ok(Self { config, link, rng, step: 0, cars: Vec::new(), pending: Default::default(), next_id: 0, fault: false, blind_steps: 0 })
    }

    pub fn t(&self) -> f64 {
        self.step as f64 * DT
    }

    pub fn link(&self) -> LinkParams {
        self.link
    }

    pub fn fault(&self) -> bool {
        self.fault
    }

    fn make_car(&self, id: VehicleId, leg: Leg, arrival: f64, s: f64, v: f64) -> Result<Car> {
        let t = self.t();
        let mut state = VehicleState::new(id, leg.lane(), self.config.vehicle_len_m, t, self.config.kinematics);
        state.s = s;
        state.v = v.clamp(0.0, state.limits.v_max);
        let mut phase_rng = self.rng.substream(Purpose::BeaconPhase(id.0));
        let schedule = BeaconSchedule::random(t, self.link.ipg_ms, &mut phase_rng, DT)?;
        Ok(Car { state, leg, arrival, inserted: t, merged_at: None, done: false, schedule, table: BeaconTable::new() })
    }

    /// Puts a vehicle on `leg` at distance `s` from the leg start moving at `v`.
    pub fn place(&mut self, leg: Leg, s: f64, v: f64) -> Result<VehicleId> {
        let id = VehicleId(self.next_id);
        self.next_id += 1;
        let car = self.make_car(id, leg, self.t(), s, v)?;
        self.cars.push(car);
        Ok(id)
    }

    /// Pins a vehicle in place (speed cap of zero).
    pub fn hold(&mut self, id: VehicleId) {
        if let Some(c) = self.cars.iter_mut().find(|c| c.state.id == id) {
            c.state.limits.v_max = 0.0;
            c.state.v = 0.0;
        }
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&VehicleState> {
        self.cars.iter().find(|c| c.state.id == id).map(|c| &c.state)
    }

    /// Distance still to drive before the merge point (negative once past it).
    pub fn distance_to_merge(&self, id: VehicleId) -> Option<f64> {
        self.cars.iter().find(|c| c.state.id == id).map(|c| -self.x(c))
    }

    /// Times at which each vehicle crossed the merge point, in id order.
    pub fn merge_order(&self) -> Vec<(VehicleId, f64)> {
        let mut v: Vec<_> = self.cars.iter().filter_map(|c| c.merged_at.map(|t| (c.state.id, t))).collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        v
    }

    fn x(&self, car: &Car) -> f64 {
        car.state.s - self.config.geometry.leg_len(car.leg)
    }

    fn insert_arrivals(&mut self) -> Result<()> {
        let t = self.t();
        for leg in [Leg::Mainline, Leg::Ramp] {
            let li = leg.index() as usize;
            let Some(&(id, arrival)) = self.pending[li].front() else { continue };
            if arrival > t {
                continue;
            }
            let last = self
                .cars
                .iter()
                .filter(|c| !c.done && c.leg == leg && c.merged_at.is_none())
                .min_by(|a, b| a.state.s.total_cmp(&b.state.s));
            let v_max = self.config.kinematics.v_max;
            let v_insert = match last {
                None => v_max,
                Some(l) => {
                    let gap = l.state.s - l.state.length;
                    if gap < self.config.min_insert_gap_m {
                        continue;
                    }
                    let k = self.config.kinematics;
                    let v_bar = 0.5 * (v_max + l.state.v);
                    safe_velocity(l.state.v, gap, k.tau, k.b_decel, v_bar)?.min(v_max)
                }
            };
            self.pending[li].pop_front();
            let car = self.make_car(id, leg, arrival, 0.0, v_insert)?;
            self.cars.push(car);
        }
        Ok(())
    }

    fn exchange_beacons(&mut self) {
        let t = self.t();
        let step = self.step;
        let geometry = self.config.geometry;
        let mut due = Vec::new();
        for car in self.cars.iter_mut().filter(|c| !c.done) {
            if car.schedule.fire(step) {
                let x = car.state.s - geometry.leg_len(car.leg);
                due.push(Beacon {
                    sender: car.state.id,
                    sent_at: t,
                    snapshot: Snapshot { s: car.state.s, v: car.state.v, lane: car.state.lane, pos: geometry.position(car.leg, x) },
                    payload: (),
                });
            }
        }
        if due.is_empty() {
            return;
        }
        let receivers = self.cars.iter_mut().filter(|c| !c.done).map(|c| {
            let x = c.state.s - geometry.leg_len(c.leg);
            (c.state.id, geometry.position(c.leg, x), &mut c.table)
        });
        deliver(&due, receivers, self.link.mhr_km);
    }

    /// Speed each active vehicle takes for the coming step.
    fn control(&self) -> (Vec<f64>, u64) {
        let mut blind = 0;
        let t = self.t();
        let geometry = &self.config.geometry;
        let xs: Vec<f64> = self.cars.iter().map(|c| self.x(c)).collect();
        let mut speeds = vec![0.0; self.cars.len()];
        for (i, car) in self.cars.iter().enumerate() {
            if car.done {
                continue;
            }
            let xi = xs[i];
            let pre = car.merged_at.is_none();
            let mut v_safe = f64::INFINITY;

            // Sensed leader: same leg before the merge, the merged road otherwise.
            let mut leader: Option<usize> = None;
            for (j, other) in self.cars.iter().enumerate() {
                if j == i || other.done {
                    continue;
                }
                let other_pre = other.merged_at.is_none();
                let same_path = if pre { (other_pre && other.leg == car.leg) || !other_pre } else { !other_pre };
                if !same_path || !virtually_ahead(xs[j], other.state.id, xi, car.state.id) {
                    continue;
                }
                if leader.is_none_or(|l| xs[j] < xs[l]) {
                    leader = Some(j);
                }
            }
            if let Some(l) = leader {
                let lead = &self.cars[l];
                let gap = xs[l] - lead.state.length - xi;
                v_safe = v_safe.min(car.state.safe_speed_behind(LeaderInfo { v: lead.state.v, gap }));
            }

            if pre {
                // Nearest virtual predecessor on the other leg, known only by beacon.
                let other_leg = car.leg.other();
                let mut pred: Option<usize> = None;
                for (j, other) in self.cars.iter().enumerate() {
                    if other.done || other.merged_at.is_some() || other.leg != other_leg {
                        continue;
                    }
                    if virtually_ahead(xs[j], other.state.id, xi, car.state.id) && pred.is_none_or(|p| xs[j] < xs[p]) {
                        pred = Some(j);
                    }
                }
                if let Some(p) = pred {
                    let p_car = &self.cars[p];
                    match car.table.get(p_car.state.id) {
                        Some(entry) => {
                            let est = braking_bound(entry, t, p_car.state.limits.b_decel);
                            let x_est = est.s - geometry.leg_len(other_leg);
                            let gap = x_est - p_car.state.length - xi;
                            v_safe = v_safe.min(car.state.safe_speed_behind(LeaderInfo { v: est.v, gap }));
                        }
                        None => {
                            // Hold one vehicle length short of the merge point
                            // until the predecessor is heard.
                            let k = car.state.limits;
                            let hold = (-xi - self.config.vehicle_len_m).max(0.0);
                            let v_stop = safe_velocity(0.0, hold, k.tau, self.config.merge_plan_decel, 0.5 * car.state.v)
                                .expect("validated parameters");
                            if v_stop < car.state.v + k.a_max * DT && v_stop < v_safe {
                                blind += 1;
                            }
                            v_safe = v_safe.min(v_stop);
                        }
                    }
                }
            }
            speeds[i] = car.state.next_speed(v_safe, f64::INFINITY, DT);
        }
        (speeds, blind)
    }

    /// One merge-control step: beacon exchange, Krauss control against sensed
    /// and communicated predecessors, integration, re-homing and bookkeeping.
    pub fn merge_step(&mut self) -> Result<()> {
        self.insert_arrivals()?;
        self.exchange_beacons();
        let (speeds, blind) = self.control();
        self.blind_steps += blind;
        let t_next = (self.step + 1) as f64 * DT;
        let post_len = self.config.geometry.post_merge_m;
        for (car, v) in self.cars.iter_mut().zip(speeds) {
            if car.done {
                continue;
            }
            car.state.advance(v, DT);
            let x = car.state.s - self.config.geometry.leg_len(car.leg);
            if car.merged_at.is_none() && x >= 0.0 {
                car.merged_at = Some(t_next);
                car.state.lane = Lane::Mainline;
            }
            if x >= post_len {
                car.done = true;
            }
        }
        self.step += 1;
        if self.overlap() {
            self.fault = true;
        }
        Ok(())
    }

    /// True if two vehicles on the same stretch of road overlap.
    fn overlap(&self) -> bool {
        let mut groups: [Vec<(f64, f64)>; 3] = Default::default();
        for c in self.cars.iter().filter(|c| !c.done) {
            let g = match (c.merged_at.is_some(), c.leg) {
                (true, _) => 2,
                (false, Leg::Mainline) => 0,
                (false, Leg::Ramp) => 1,
            };
            groups[g].push((self.x(c), c.state.length));
        }
        groups.iter_mut().any(|g| {
            g.sort_by(|a, b| a.0.total_cmp(&b.0));
            g.windows(2).any(|w| w[1].0 - w[1].1 - w[0].0 < -1e-9)
        })
    }

    fn finished(&self) -> bool {
        self.pending.iter().all(|p| p.is_empty()) && self.cars.iter().all(|c| c.done)
    }

    /// Runs to completion (or the drain limit) and summarises.
    pub fn run(mut self) -> Result<MetricsRecord> {
        let limit = self.config.horizon_s + self.config.drain_s;
        while !self.finished() && self.t() < limit {
            self.merge_step()?;
        }
        Ok(self.record())
    }

    pub fn record(&self) -> MetricsRecord {
        let c = &self.config;
        let mut rec = MetricsRecord::new(Scenario::Ramp, c.protocol, c.density_vph, c.seed);
        rec.theta_deg = Some(c.geometry.theta_deg);
        let mut ramp_times = Vec::new();
        let mut main_times = Vec::new();
        let mut unfinished = self.pending.iter().map(|p| p.len()).sum::<usize>();
        let mut cars: Vec<&Car> = self.cars.iter().collect();
        cars.sort_by_key(|c| c.state.id);
        for car in cars {
            let road_time = car.merged_at.map(|m| m - car.arrival);
            if road_time.is_none() {
                unfinished += 1;
            }
            if car.arrival >= c.warmup_s {
                if let Some(rt) = road_time {
                    match car.leg {
                        Leg::Ramp => ramp_times.push(rt),
                        Leg::Mainline => main_times.push(rt),
                    }
                }
            }
            rec.vehicles.push(VehicleDetail {
                id: car.state.id.0,
                origin: match car.leg {
                    Leg::Mainline => "mainline".into(),
                    Leg::Ramp => "ramp".into(),
                },
                start_s: car.inserted,
                finish_s: car.merged_at,
                value_s: road_time,
            });
        }
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        rec.metric_s = mean(&ramp_times);
        rec.gridlock = unfinished > 0;
        rec.fault = self.fault;
        rec.extras = vec![
            ("ramp_vehicles".into(), ramp_times.len() as f64),
            ("mainline_mean_s".into(), mean(&main_times)),
            ("unfinished".into(), unfinished as f64),
            ("blind_steps".into(), self.blind_steps as f64),
        ];
        rec
    }
}

/// Runs one ramp-merge simulation.
pub fn run_ramp(config: &RampConfig) -> Result<MetricsRecord> {
    RampSim::new(config.clone())?.run()
}
