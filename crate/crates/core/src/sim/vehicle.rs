use serde::{Deserialize, Serialize};

use super::krauss::{desired_speed, safe_velocity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VehicleId(pub u32);

impl std::fmt::Display for VehicleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Compass heading of an intersection approach (direction the traffic comes from).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Approach {
    North,
    East,
    South,
    West,
}

impl Approach {
    pub const ALL: [Approach; 4] = [Approach::North, Approach::East, Approach::South, Approach::West];

    /// Unit vector pointing from the intersection centre towards the
    /// upstream end of this approach.
    pub fn outward(self) -> (f64, f64) {
        match self {
            Approach::North => (0.0, 1.0),
            Approach::East => (1.0, 0.0),
            Approach::South => (0.0, -1.0),
            Approach::West => (-1.0, 0.0),
        }
    }
}

/// Path a vehicle is currently driving on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Lane {
    Mainline,
    Ramp,
    Approach(Approach),
    Platoon,
}

/// Kinematic limits and driver parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub a_max: f64,
    pub b_decel: f64,
    pub v_max: f64,
    pub tau: f64,
}

impl Kinematics {
    /// Road-scenario defaults: 8.33 m/s cap makes a free 100 m leg take 12 s.
    pub const ROAD: Kinematics = Kinematics { a_max: 2.5, b_decel: 4.5, v_max: 8.33, tau: 1.0 };
}

/// Speeds below this are treated as standstill, m/s.
pub const CREEP_STOP_MPS: f64 = 1e-3;

/// Sensed leader: its speed and the bumper-to-bumper gap to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderInfo {
    pub v: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: VehicleId,
    /// Distance travelled along the current path, metres.
    pub s: f64,
    pub lane: Lane,
    pub v: f64,
    pub length: f64,
    pub spawn_time: f64,
    pub limits: Kinematics,
}

impl VehicleState {
    pub fn new(id: VehicleId, lane: Lane, length: f64, spawn_time: f64, limits: Kinematics) -> Self {
        Self { id, s: 0.0, lane, v: 0.0, length, spawn_time, limits }
    }

    /// Safe velocity against one leader. Gaps are clamped at zero and speeds
    /// at zero so float noise upstream cannot turn into a domain error.
    pub fn safe_speed_behind(&self, leader: LeaderInfo) -> f64 {
        let v_l = leader.v.max(0.0);
        let v_bar = 0.5 * (self.v + v_l);
        safe_velocity(v_l, leader.gap.max(0.0), self.limits.tau, self.limits.b_decel, v_bar)
            .expect("vehicle parameters validated at construction")
    }

    /// Krauss speed for the next step given the tightest safe velocity and an
    /// extra speed cap (e.g. a scheduling target).
    pub fn next_speed(&self, v_safe: f64, cap: f64, dt: f64) -> f64 {
        let v = desired_speed(v_safe.max(0.0), self.v, self.limits.a_max, self.limits.v_max, dt)
            .expect("vehicle parameters validated at construction");
        let v = v.min(cap).clamp(0.0, self.limits.v_max);
        // Creeping towards a stopped leader shrinks the gap geometrically
        // until it drowns in position rounding; settle instead.
        if v < CREEP_STOP_MPS {
            0.0
        } else {
            v
        }
    }

    /// Moves the vehicle forward at `v_new` for one step.
    pub fn advance(&mut self, v_new: f64, dt: f64) {
        let v_new = v_new.clamp(0.0, self.limits.v_max);
        self.v = v_new;
        self.s += v_new * dt;
    }
}

/// One Krauss step against an optional leader.
pub fn step_vehicle(state: &VehicleState, leader: Option<LeaderInfo>, dt: f64) -> VehicleState {
    assert!(dt > 0.0, "dt must be positive");
    let v_safe = leader.map_or(f64::INFINITY, |l| state.safe_speed_behind(l));
    let v_new = state.next_speed(v_safe, f64::INFINITY, dt);
    let mut next = state.clone();
    next.advance(v_new, dt);
    next
}
