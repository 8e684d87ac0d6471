//! Krauss car-following law.
//!
//! The follower picks the largest speed that still lets it stop behind a
//! braking leader, then caps it by its acceleration ability and speed limit.

use crate::error::{domain, Result};

fn check(name: &str, x: f64, allow_zero: bool) -> Result<()> {
    if !x.is_finite() {
        return Err(domain(format!("{name} must be finite, got {x}")));
    }
    if x < 0.0 || (!allow_zero && x == 0.0) {
        let bound = if allow_zero { ">= 0" } else { "> 0" };
        return Err(domain(format!("{name} must be {bound}, got {x}")));
    }
    Ok(())
}

/// Safe velocity behind a leader driving at `v_leader` with bumper-to-bumper
/// gap `gap`:
///
/// `v_l + (g - v_l * tau) / (v_bar / b + tau)`, never below zero.
pub fn safe_velocity(v_leader: f64, gap: f64, tau: f64, b: f64, v_bar: f64) -> Result<f64> {
    check("v_leader", v_leader, true)?;
    check("gap", gap, true)?;
    check("tau", tau, false)?;
    check("b", b, false)?;
    check("v_bar", v_bar, true)?;
    let v = v_leader + (gap - v_leader * tau) / (v_bar / b + tau);
    Ok(v.max(0.0))
}

/// Minimum of the safe velocity, the speed reachable within one step of
/// acceleration, and the speed cap. `v_safe` may be `+inf` when there is no
/// leader.
pub fn desired_speed(v_safe: f64, v: f64, a: f64, v_max: f64, dt: f64) -> Result<f64> {
    if v_safe.is_nan() || v_safe < 0.0 {
        return Err(domain(format!("v_safe must be >= 0, got {v_safe}")));
    }
    check("v", v, true)?;
    check("a", a, true)?;
    check("v_max", v_max, true)?;
    check("dt", dt, false)?;
    Ok(v_safe.min(v + a * dt).min(v_max))
}
