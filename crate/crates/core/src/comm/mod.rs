//! Communication regimes, range-gated beacon delivery and neighbour tables.

mod beacon;
mod geometry;
mod protocol;

pub use beacon::{braking_bound, deliver, neighbor_estimate, Beacon, BeaconSchedule, BeaconTable, Estimate, Snapshot};
pub use geometry::{in_range, Point};
pub use protocol::{protocol_params, LinkParams, ProtocolModel};
