//! The three traffic scenarios.

pub mod intersection;
pub mod platoon;
pub mod ramp;

pub use intersection::{run_intersection, IntersectionConfig, IntersectionGeometry, IntersectionSim};
pub use platoon::{run_platoon, PlatoonConfig, PlatoonSim, Relay};
pub use ramp::{run_ramp, RampConfig, RampGeometry, RampSim};
