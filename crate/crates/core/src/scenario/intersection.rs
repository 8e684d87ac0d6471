//! Four-approach intersection run by a central reservation manager.
//!
//! Vehicles spawn on a lead-in stretch upstream of each 100 m approach and
//! drive straight through a square conflict box. Requests ride the vehicles'
//! beacons; grants ride the manager's beacons, and both only arrive within
//! the hearing range. The manager hands out first-come-first-served slots
//! with full mutual exclusion over the box. A vehicle enters only when its
//! slot has started and it can clear the box before the slot ends; otherwise
//! it stops at the box line and asks again.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::comm::{in_range, BeaconSchedule, LinkParams, Point, ProtocolModel};
use crate::error::{Error, Result};
use crate::metrics::{MetricsRecord, Scenario, VehicleDetail};
use crate::sim::{Approach, Kinematics, Lane, LeaderInfo, Purpose, RngStream, VehicleId, VehicleState, DT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionGeometry {
    /// Length of each approach measured to the centre, m.
    pub approach_len_m: f64,
    pub box_side_m: f64,
    /// Road upstream of each approach where vehicles are spawned, m.
    pub lead_in_m: f64,
}

impl Default for IntersectionGeometry {
    fn default() -> Self {
        Self { approach_len_m: 100.0, box_side_m: 10.0, lead_in_m: 140.0 }
    }
}

impl IntersectionGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.box_side_m > 0.0 && self.approach_len_m > self.box_side_m / 2.0) {
            return Err(Error::Config(format!(
                "approach length {} must exceed half the box side {}",
                self.approach_len_m, self.box_side_m
            )));
        }
        if !(self.lead_in_m >= 0.0 && self.lead_in_m.is_finite()) {
            return Err(Error::Config(format!("lead-in must be >= 0, got {}", self.lead_in_m)));
        }
        Ok(())
    }

    /// Distance from the spawn point to the centre.
    pub fn spawn_radius(&self) -> f64 {
        self.lead_in_m + self.approach_len_m
    }

    /// Signed distance from the centre for a vehicle at path position `s`;
    /// negative once past the centre.
    pub fn radius(&self, s: f64) -> f64 {
        self.spawn_radius() - s
    }

    /// Distance from the front at path position `s` to the box entry line.
    pub fn to_box(&self, s: f64) -> f64 {
        self.radius(s) - self.box_side_m / 2.0
    }

    pub fn position(&self, approach: Approach, s: f64) -> Point {
        let (ux, uy) = approach.outward();
        let r = self.radius(s);
        Point::new(ux * r, uy * r)
    }
}

/// Slot request carried on a vehicle beacon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub vehicle: VehicleId,
    pub approach: Approach,
    pub sent_at: f64,
    /// Distance to the box line when sent, m.
    pub dist_m: f64,
    pub speed: f64,
    /// Earliest arrival at the box line: `sent_at + dist_m / v_max`.
    pub est_arrival: f64,
    /// Incremented every time the vehicle gives up a slot.
    pub attempt: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reservation {
    pub vehicle: VehicleId,
    pub approach: Approach,
    pub attempt: u32,
    pub entry: f64,
    pub exit: f64,
}

/// What the manager needs to size a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotSizing {
    pub box_side_m: f64,
    pub vehicle_len_m: f64,
    pub kinematics: Kinematics,
    /// Margin added to every slot, s.
    pub pad_s: f64,
}

/// Time to cover `dist` starting at `v0` under full acceleration `a` up to `v_max`.
pub fn crossing_time(v0: f64, dist: f64, a: f64, v_max: f64) -> f64 {
    let v0 = v0.clamp(0.0, v_max);
    let t_acc = (v_max - v0) / a;
    let d_acc = v0 * t_acc + 0.5 * a * t_acc * t_acc;
    if d_acc >= dist {
        ((v0 * v0 + 2.0 * a * dist).sqrt() - v0) / a
    } else {
        t_acc + (dist - d_acc) / v_max
    }
}

impl SlotSizing {
    /// Slot length for `req` if granted entry at `entry` with the grant sent at
    /// `t_tx`. The entry speed is estimated pessimistically: the vehicle is
    /// assumed to have closed in at `v_max` until `t_tx` and to spread the
    /// rest evenly up to `entry`, never faster than it could accelerate.
    pub fn duration(&self, req: &Request, entry: f64, t_tx: f64) -> f64 {
        let k = &self.kinematics;
        let r_tx = (req.dist_m - k.v_max * (t_tx - req.sent_at).max(0.0)).max(0.0);
        let window = entry - t_tx;
        let v_even = if r_tx <= 0.0 || window <= 0.0 { 0.0 } else { r_tx / window };
        let v_reach = (req.speed * req.speed + 2.0 * k.a_max * req.dist_m).sqrt();
        let v_e = v_even.min(v_reach).min(k.v_max);
        crossing_time(v_e, self.box_side_m + self.vehicle_len_m, k.a_max, k.v_max) + self.pad_s
    }
}

/// Builds the request a vehicle would put on its beacon, or `None` when the
/// manager at the centre is out of range.
pub fn request_slot(
    geometry: &IntersectionGeometry,
    state: &VehicleState,
    approach: Approach,
    attempt: u32,
    now: f64,
    mhr_km: f64,
) -> Option<Request> {
    let pos = geometry.position(approach, state.s);
    if !in_range(pos, Point::new(0.0, 0.0), mhr_km) {
        return None;
    }
    let dist = geometry.to_box(state.s).max(0.0);
    Some(Request {
        vehicle: state.id,
        approach,
        sent_at: now,
        dist_m: dist,
        speed: state.v,
        est_arrival: now + dist / state.limits.v_max,
        attempt,
    })
}

/// One request as processed by the manager, with the time its grant goes out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoggedRequest {
    pub request: Request,
    pub t_tx: f64,
}

/// Reservation manager at the intersection centre.
#[derive(Debug, Clone)]
pub struct Manager {
    sizing: SlotSizing,
    slots: Vec<Reservation>,
    log: Vec<LoggedRequest>,
}

impl Manager {
    pub fn new(sizing: SlotSizing) -> Self {
        Self { sizing, slots: Vec::new(), log: Vec::new() }
    }

    /// Live reservations in grant order.
    pub fn slots(&self) -> &[Reservation] {
        &self.slots
    }

    pub fn log(&self) -> &[LoggedRequest] {
        &self.log
    }

    pub fn reservation(&self, id: VehicleId) -> Option<&Reservation> {
        self.slots.iter().find(|r| r.vehicle == id)
    }
}

/// Handles one request: repeats of a live slot are ignored, a higher attempt
/// cancels the old slot, and new slots start no earlier than the latest
/// granted exit.
pub fn grant_slot(manager: &mut Manager, req: &Request, t_tx: f64) -> Reservation {
    manager.log.push(LoggedRequest { request: *req, t_tx });
    if let Some(r) = manager.slots.iter().find(|r| r.vehicle == req.vehicle && r.attempt >= req.attempt) {
        return *r;
    }
    manager.slots.retain(|r| r.vehicle != req.vehicle);
    let latest = manager.slots.iter().map(|r| r.exit).fold(f64::NEG_INFINITY, f64::max);
    let entry = req.est_arrival.max(latest);
    let exit = entry + manager.sizing.duration(req, entry, t_tx);
    let r = Reservation { vehicle: req.vehicle, approach: req.approach, attempt: req.attempt, entry, exit };
    manager.slots.push(r);
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionConfig {
    pub geometry: IntersectionGeometry,
    pub protocol: ProtocolModel,
    /// Density fed to the protocol fits, veh/h.
    pub density_vph: f64,
    pub seed: u64,
    pub n_vehicles: usize,
    /// Arrival rate of the generated vehicles, veh/h.
    pub demand_vph: f64,
    pub horizon_s: f64,
    pub kinematics: Kinematics,
    pub vehicle_len_m: f64,
    pub pad_s: f64,
    pub min_insert_gap_m: f64,
}

impl IntersectionConfig {
    pub fn new(protocol: ProtocolModel, density_vph: f64, seed: u64) -> Self {
        Self {
            geometry: IntersectionGeometry::default(),
            protocol,
            density_vph,
            seed,
            n_vehicles: 20,
            demand_vph: 1800.0,
            horizon_s: 600.0,
            kinematics: Kinematics::ROAD,
            vehicle_len_m: 5.0,
            pad_s: 0.3,
            min_insert_gap_m: 2.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.protocol.params(self.density_vph)?;
        if self.n_vehicles == 0 {
            return Err(Error::Config("need at least one vehicle".into()));
        }
        if !(self.demand_vph > 0.0 && self.horizon_s > 0.0 && self.pad_s >= 0.0 && self.vehicle_len_m > 0.0) {
            return Err(Error::Config("demand, horizon and vehicle length must be > 0, pad >= 0".into()));
        }
        Ok(())
    }

    fn sizing(&self) -> SlotSizing {
        SlotSizing {
            box_side_m: self.geometry.box_side_m,
            vehicle_len_m: self.vehicle_len_m,
            kinematics: self.kinematics,
            pad_s: self.pad_s,
        }
    }
}

#[derive(Debug, Clone)]
struct Car {
    state: VehicleState,
    approach: Approach,
    schedule: BeaconSchedule,
    attempt: u32,
    grant: Option<Reservation>,
    committed: bool,
    entered_approach: Option<f64>,
    cleared: Option<f64>,
}

/// Stepwise intersection simulation.
#[derive(Debug, Clone)]
pub struct IntersectionSim {
    config: IntersectionConfig,
    link: LinkParams,
    rng: RngStream,
    step: u64,
    cars: Vec<Car>,
    pending: Vec<(VehicleId, f64, Approach)>,
    manager: Manager,
    manager_schedule: BeaconSchedule,
    co_occupancy: u64,
    drops: u64,
}

impl IntersectionSim {
    pub fn new(config: IntersectionConfig) -> Result<Self> {
        let mut sim = Self::empty(config)?;
        let gaps = Exp::new(sim.config.demand_vph / 3600.0).map_err(|e| Error::Config(e.to_string()))?;
        let mut arrivals = sim.rng.substream(Purpose::Arrivals(0));
        let mut routing = sim.rng.substream(Purpose::Routing);
        let mut t = 0.0;
        for i in 0..sim.config.n_vehicles {
            if i > 0 {
                t += gaps.sample(&mut arrivals);
            }
            let approach = Approach::ALL[routing.random_range(0..4)];
            sim.pending.push((VehicleId(i as u32), t, approach));
        }
        sim.pending.reverse();
        Ok(sim)
    }

    /// Simulation without generated traffic; vehicles are added with [`IntersectionSim::place`].
    pub fn empty(config: IntersectionConfig) -> Result<Self> {
        config.validate()?;
        let link = config.protocol.params(config.density_vph)?;
        let rng = RngStream::new(config.seed);
        let mut phase = rng.substream(Purpose::BeaconPhase(u32::MAX));
        let manager_schedule = BeaconSchedule::random(0.0, link.ipg_ms, &mut phase, DT)?;
        let manager = Manager::new(config.sizing());
        Ok(Self { config, link, rng, step: 0, cars: Vec::new(), pending: Vec::new(), manager, manager_schedule, co_occupancy: 0, drops: 0 })
    }

    pub fn t(&self) -> f64 {
        self.step as f64 * DT
    }

    pub fn link(&self) -> LinkParams {
        self.link
    }

    pub fn manager(&self) -> &Manager {
        &self.manager
    }

    pub fn co_occupancy(&self) -> u64 {
        self.co_occupancy
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&VehicleState> {
        self.cars.iter().find(|c| c.state.id == id).map(|c| &c.state)
    }

    fn make_car(&self, id: VehicleId, approach: Approach, s: f64, v: f64) -> Result<Car> {
        let t = self.t();
        let mut state = VehicleState::new(id, Lane::Approach(approach), self.config.vehicle_len_m, t, self.config.kinematics);
        state.s = s;
        state.v = v.clamp(0.0, state.limits.v_max);
        let mut phase = self.rng.substream(Purpose::BeaconPhase(id.0));
        let schedule = BeaconSchedule::random(t, self.link.ipg_ms, &mut phase, DT)?;
        let entered_approach = (s >= self.config.geometry.lead_in_m).then_some(t);
        Ok(Car { state, approach, schedule, attempt: 0, grant: None, committed: false, entered_approach, cleared: None })
    }

    /// Puts a vehicle on `approach` at path position `s` (0 at the spawn point).
    pub fn place(&mut self, approach: Approach, s: f64, v: f64) -> Result<VehicleId> {
        let id = VehicleId(self.cars.len() as u32 + self.pending.len() as u32 + 1000);
        let car = self.make_car(id, approach, s, v)?;
        self.cars.push(car);
        Ok(id)
    }

    fn insert_arrivals(&mut self) -> Result<()> {
        let t = self.t();
        let k = self.config.kinematics;
        for approach in Approach::ALL {
            // Earliest pending arrival on this approach.
            let Some(idx) = self.pending.iter().rposition(|p| p.2 == approach) else { continue };
            let (id, arrival, _) = self.pending[idx];
            if arrival > t {
                continue;
            }
            let last =
                self.cars.iter().filter(|c| c.approach == approach && c.cleared.is_none()).min_by(|a, b| a.state.s.total_cmp(&b.state.s));
            let v = match last {
                None => k.v_max,
                Some(l) => {
                    let gap = l.state.s - l.state.length;
                    if gap < self.config.min_insert_gap_m {
                        continue;
                    }
                    let mut probe = VehicleState::new(id, Lane::Approach(approach), self.config.vehicle_len_m, t, k);
                    probe.v = k.v_max;
                    probe.safe_speed_behind(LeaderInfo { v: l.state.v, gap }).min(k.v_max)
                }
            };
            self.pending.remove(idx);
            let car = self.make_car(id, approach, 0.0, v)?;
            self.cars.push(car);
        }
        Ok(())
    }

    fn exchange(&mut self) {
        let now = self.t();
        let step = self.step;
        let mhr = self.link.mhr_km;
        let geometry = self.config.geometry;
        let mut requests = Vec::new();
        for car in self.cars.iter_mut().filter(|c| c.cleared.is_none()) {
            if !car.schedule.fire(step) {
                continue;
            }
            let waiting = !car.committed && car.grant.is_none_or(|g| g.attempt != car.attempt);
            if waiting && geometry.to_box(car.state.s) > 0.0 {
                if let Some(req) = request_slot(&geometry, &car.state, car.approach, car.attempt, now, mhr) {
                    requests.push(req);
                }
            }
        }
        requests.sort_by(|a, b| a.sent_at.total_cmp(&b.sent_at).then(a.vehicle.cmp(&b.vehicle)));
        let t_tx = self.manager_schedule.next_step() as f64 * DT;
        for req in &requests {
            grant_slot(&mut self.manager, req, t_tx);
        }
        if self.manager_schedule.fire(step) {
            let centre = Point::new(0.0, 0.0);
            for car in self.cars.iter_mut().filter(|c| c.cleared.is_none() && !c.committed) {
                if !in_range(geometry.position(car.approach, car.state.s), centre, mhr) {
                    continue;
                }
                if let Some(r) = self.manager.reservation(car.state.id) {
                    if r.attempt == car.attempt {
                        car.grant = Some(*r);
                    }
                }
            }
        }
    }

    // Indexed: a car's grant is updated while others are read.
    #[allow(clippy::needless_range_loop)]
    fn control(&mut self) -> Vec<f64> {
        let now = self.t();
        let geometry = self.config.geometry;
        let cross_dist = geometry.box_side_m + self.config.vehicle_len_m;
        let mut speeds = vec![0.0; self.cars.len()];
        for i in 0..self.cars.len() {
            let car = &self.cars[i];
            if car.cleared.is_some() {
                continue;
            }
            let mut v_safe = f64::INFINITY;
            let leader = self
                .cars
                .iter()
                .filter(|o| o.cleared.is_none() && o.approach == car.approach && o.state.s > car.state.s)
                .min_by(|a, b| a.state.s.total_cmp(&b.state.s));
            if let Some(l) = leader {
                let gap = (l.state.s - l.state.length - car.state.s).max(0.0);
                v_safe = car.state.safe_speed_behind(LeaderInfo { v: l.state.v, gap });
            }
            let to_box = geometry.to_box(car.state.s);
            if car.committed || to_box <= 0.0 {
                speeds[i] = car.state.next_speed(v_safe, f64::INFINITY, DT);
                continue;
            }
            let k = car.state.limits;
            let grant = car.grant.filter(|g| g.attempt == car.attempt);
            let mut v_new = match grant {
                Some(g) => {
                    let target = if g.entry - now > 1e-9 { to_box / (g.entry - now) } else { k.v_max };
                    let cap = target.max(car.state.v - k.b_decel * DT);
                    car.state.next_speed(v_safe, cap, DT)
                }
                None => {
                    let stop = car.state.safe_speed_behind(LeaderInfo { v: 0.0, gap: to_box });
                    car.state.next_speed(v_safe.min(stop), to_box / DT, DT)
                }
            };
            if let Some(g) = grant {
                if v_new * DT >= to_box && v_new > 0.0 {
                    let t_cross = now + to_box / v_new;
                    let clear = t_cross + crossing_time(v_new, cross_dist, k.a_max, k.v_max);
                    if t_cross >= g.entry - 1e-6 && clear <= g.exit {
                        self.cars[i].committed = true;
                    } else {
                        // Give the slot back and stop at the line.
                        v_new = v_new.min(to_box / DT);
                        let car = &mut self.cars[i];
                        car.grant = None;
                        car.attempt += 1;
                        self.drops += 1;
                    }
                }
            }
            speeds[i] = v_new;
        }
        speeds
    }

    pub fn step(&mut self) -> Result<()> {
        self.insert_arrivals()?;
        self.exchange();
        let speeds = self.control();
        let t_next = (self.step + 1) as f64 * DT;
        let geometry = self.config.geometry;
        let half = geometry.box_side_m / 2.0;
        for (car, v) in self.cars.iter_mut().zip(speeds) {
            if car.cleared.is_some() {
                continue;
            }
            car.state.advance(v, DT);
            if car.entered_approach.is_none() && car.state.s >= geometry.lead_in_m {
                car.entered_approach = Some(t_next);
            }
            if geometry.radius(car.state.s) + car.state.length <= -half {
                car.cleared = Some(t_next);
            }
        }
        self.step += 1;
        let inside = self
            .cars
            .iter()
            .filter(|c| c.cleared.is_none())
            .filter(|c| {
                let front = geometry.radius(c.state.s);
                front < half && front + c.state.length > -half
            })
            .count();
        if inside > 1 {
            self.co_occupancy += 1;
        }
        Ok(())
    }

    fn finished(&self) -> bool {
        self.pending.is_empty() && self.cars.iter().all(|c| c.cleared.is_some())
    }

    pub fn run(mut self) -> Result<MetricsRecord> {
        while !self.finished() && self.t() < self.config.horizon_s {
            self.step()?;
        }
        Ok(self.record())
    }

    pub fn record(&self) -> MetricsRecord {
        let c = &self.config;
        let mut rec = MetricsRecord::new(Scenario::Intersection, c.protocol, c.density_vph, c.seed);
        let start = self.cars.iter().filter_map(|c| c.entered_approach).fold(f64::INFINITY, f64::min);
        let end = self.cars.iter().filter_map(|c| c.cleared).fold(f64::NEG_INFINITY, f64::max);
        let unfinished = self.pending.len() + self.cars.iter().filter(|c| c.cleared.is_none()).count();
        rec.gridlock = unfinished > 0;
        rec.fault = self.co_occupancy > 0;
        rec.metric_s = if rec.gridlock || !start.is_finite() { 0.0 } else { end - start };
        let mut cars: Vec<&Car> = self.cars.iter().collect();
        cars.sort_by_key(|c| c.state.id);
        for car in cars {
            rec.vehicles.push(VehicleDetail {
                id: car.state.id.0,
                origin: format!("{:?}", car.approach).to_lowercase(),
                start_s: car.entered_approach.unwrap_or(car.state.spawn_time),
                finish_s: car.cleared,
                value_s: match (car.entered_approach, car.cleared) {
                    (Some(a), Some(b)) => Some(b - a),
                    _ => None,
                },
            });
        }
        rec.extras = vec![
            ("requests_heard".into(), self.manager.log.len() as f64),
            ("slot_drops".into(), self.drops as f64),
            ("co_occupancy_steps".into(), self.co_occupancy as f64),
            ("unfinished".into(), unfinished as f64),
        ];
        rec
    }
}

/// Runs one intersection simulation.
pub fn run_intersection(config: &IntersectionConfig) -> Result<MetricsRecord> {
    IntersectionSim::new(config.clone())?.run()
}
