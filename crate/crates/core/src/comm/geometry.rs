use serde::{Deserialize, Serialize};

/// Planar position, metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Whether two nodes can hear each other; the range boundary is inclusive.
pub fn in_range(a: Point, b: Point, mhr_km: f64) -> bool {
    a.distance(&b) <= mhr_km * 1000.0
}
