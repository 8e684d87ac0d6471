//! Traffic and V2X communication co-simulation.
//!
//! Vehicles follow the Krauss car-following law on a fixed 0.1 s step and
//! learn about each other only through periodic beacons whose reach and
//! period come from a [`comm::ProtocolModel`]. Three scenarios measure how
//! the communication regime shows up in traffic performance: ramp merging,
//! a reservation-managed intersection, and an emergency brake in a truck
//! platoon.

pub mod comm;
pub mod config;
pub mod error;
pub mod metrics;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
