/// Fixed-step simulation clock.
///
/// Time is always derived from the step counter so that it never drifts,
/// no matter how many steps have been taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    dt: f64,
    step_index: u64,
}

impl SimClock {
    pub fn new(dt: f64) -> Self {
        assert!(dt > 0.0 && dt.is_finite(), "dt must be positive");
        Self { dt, step_index: 0 }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn t(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    pub fn tick(&mut self) {
        self.step_index += 1;
    }

    /// First step whose time is at or after `t`.
    pub fn step_at_or_after(&self, t: f64) -> u64 {
        step_at_or_after(t, self.dt)
    }
}

/// Grid tolerance used when snapping continuous times onto the step grid.
const GRID_EPS: f64 = 1e-9;

pub(crate) fn step_at_or_after(t: f64, dt: f64) -> u64 {
    if t <= 0.0 {
        return 0;
    }
    (t / dt - GRID_EPS).ceil().max(0.0) as u64
}
