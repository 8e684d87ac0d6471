use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{domain, Result};

/// Poisson arrival times over `[0, horizon)` for a flow of `density` veh/h.
pub fn spawn_arrivals<R: Rng>(density: f64, horizon: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(density.is_finite() && density > 0.0) {
        return Err(domain(format!("density must be > 0, got {density}")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(domain(format!("horizon must be > 0, got {horizon}")));
    }
    let gaps = Exp::new(density / 3600.0).map_err(|e| domain(e.to_string()))?;
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += gaps.sample(rng);
        if t >= horizon {
            break;
        }
        out.push(t);
    }
    Ok(out)
}
