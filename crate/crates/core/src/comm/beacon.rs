use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{in_range, Point};
use crate::error::{domain, Result};
use crate::sim::{step_at_or_after, Lane, VehicleId};

/// Periodic transmit schedule of one node: `origin + k * ipg`, each instant
/// snapped up onto the step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BeaconSchedule {
    origin: f64,
    ipg_s: f64,
    dt: f64,
    next_k: u64,
}

impl BeaconSchedule {
    /// `phase_fraction` in `[0, 1)` scales the packet gap into the phase
    /// offset, so equal fractions give comparable phases across regimes.
    pub fn new(spawn_time: f64, ipg_ms: f64, phase_fraction: f64, dt: f64) -> Result<Self> {
        if !(ipg_ms.is_finite() && ipg_ms > 0.0) {
            return Err(domain(format!("ipg must be > 0 ms, got {ipg_ms}")));
        }
        if !(0.0..1.0).contains(&phase_fraction) {
            return Err(domain(format!("phase fraction must be in [0, 1), got {phase_fraction}")));
        }
        let ipg_s = ipg_ms / 1000.0;
        Ok(Self { origin: spawn_time + phase_fraction * ipg_s, ipg_s, dt, next_k: 0 })
    }

    /// Schedule with the phase drawn uniformly from `rng`.
    pub fn random<R: Rng>(spawn_time: f64, ipg_ms: f64, rng: &mut R, dt: f64) -> Result<Self> {
        let u: f64 = rng.random();
        Self::new(spawn_time, ipg_ms, u, dt)
    }

    fn step_of(&self, k: u64) -> u64 {
        step_at_or_after(self.origin + k as f64 * self.ipg_s, self.dt)
    }

    /// Step index of the next pending transmission.
    pub fn next_step(&self) -> u64 {
        self.step_of(self.next_k)
    }

    /// True if a beacon is due at `step`; consumes every instant that fell on
    /// or before it (several may collapse onto one step when ipg < dt).
    pub fn fire(&mut self, step: u64) -> bool {
        if self.step_of(self.next_k) > step {
            return false;
        }
        while self.step_of(self.next_k) <= step {
            self.next_k += 1;
        }
        true
    }

    /// Quantized transmit times strictly before `until`, without consuming.
    pub fn times_before(&self, until: f64) -> Vec<f64> {
        let mut k = self.next_k;
        let mut out: Vec<f64> = Vec::new();
        loop {
            let t = self.step_of(k) as f64 * self.dt;
            if t >= until {
                return out;
            }
            if out.last() != Some(&t) {
                out.push(t);
            }
            k += 1;
        }
    }
}

/// Kinematic state carried in every beacon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub s: f64,
    pub v: f64,
    pub lane: Lane,
    pub pos: Point,
}

/// A broadcast message; `payload` holds scenario-specific content.
#[derive(Debug, Clone, PartialEq)]
pub struct Beacon<P = ()> {
    pub sender: VehicleId,
    pub sent_at: f64,
    pub snapshot: Snapshot,
    pub payload: P,
}

/// Extrapolated neighbour state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub s: f64,
    pub v: f64,
}

/// Constant-velocity extrapolation of the last beacon to `now`.
pub fn neighbor_estimate<P>(entry: &Beacon<P>, now: f64) -> Estimate {
    let age = (now - entry.sent_at).max(0.0);
    Estimate { s: entry.snapshot.s + entry.snapshot.v * age, v: entry.snapshot.v }
}

/// Least progress the sender can have made since its last beacon if it
/// braked at up to `b` m/s² right after sending: the position and speed a
/// cautious follower should assume.
pub fn braking_bound<P>(entry: &Beacon<P>, now: f64, b: f64) -> Estimate {
    let age = (now - entry.sent_at).max(0.0);
    let v = entry.snapshot.v;
    let t_stop = v / b;
    if age >= t_stop {
        Estimate { s: entry.snapshot.s + v * t_stop * 0.5, v: 0.0 }
    } else {
        Estimate { s: entry.snapshot.s + v * age - 0.5 * b * age * age, v: v - b * age }
    }
}

/// Last beacon heard from each neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct BeaconTable<P = ()> {
    entries: BTreeMap<VehicleId, Beacon<P>>,
}

impl<P> Default for BeaconTable<P> {
    fn default() -> Self {
        Self { entries: BTreeMap::new() }
    }
}

impl<P: Clone> BeaconTable<P> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `beacon` unless a newer one from the same sender is already held.
    pub fn receive(&mut self, beacon: &Beacon<P>) {
        match self.entries.get(&beacon.sender) {
            Some(held) if held.sent_at > beacon.sent_at => {}
            _ => {
                self.entries.insert(beacon.sender, beacon.clone());
            }
        }
    }

    pub fn get(&self, id: VehicleId) -> Option<&Beacon<P>> {
        self.entries.get(&id)
    }

    /// Age of the newest beacon from `id`, if any was ever heard.
    pub fn staleness(&self, id: VehicleId, now: f64) -> Option<f64> {
        self.entries.get(&id).map(|b| now - b.sent_at)
    }

    /// Extrapolated state of `id`; `None` when it was never heard.
    pub fn estimate(&self, id: VehicleId, now: f64) -> Option<Estimate> {
        self.entries.get(&id).map(|b| neighbor_estimate(b, now))
    }

    pub fn forget(&mut self, id: VehicleId) {
        self.entries.remove(&id);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Beacon<P>> {
        self.entries.values()
    }
}

/// Instantaneous, loss-free delivery of every due beacon to every receiver
/// within range (other than its sender). Returns the number of receptions.
pub fn deliver<'a, P, I>(due: &[Beacon<P>], receivers: I, mhr_km: f64) -> usize
where
    P: Clone + 'a,
    I: IntoIterator<Item = (VehicleId, Point, &'a mut BeaconTable<P>)>,
{
    let mut count = 0;
    for (id, pos, table) in receivers {
        for beacon in due {
            if beacon.sender != id && in_range(beacon.snapshot.pos, pos, mhr_km) {
                table.receive(beacon);
                count += 1;
            }
        }
    }
    count
}
