//! Time loop primitives, seeded randomness, vehicle kinematics and the
//! Krauss car-following law.

mod arrivals;
mod clock;
mod krauss;
mod rng;
mod vehicle;

pub use arrivals::spawn_arrivals;
pub(crate) use clock::step_at_or_after;
pub use clock::SimClock;
pub use krauss::{desired_speed, safe_velocity};
pub use rng::{Purpose, RngStream};
pub use vehicle::{step_vehicle, Approach, Kinematics, Lane, LeaderInfo, VehicleId, VehicleState};

/// Fixed simulation step, seconds.
pub const DT: f64 = 0.1;
