use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Hearing range times density for C-V2X, km·veh/h.
const CV2X_RANGE_DENSITY_PRODUCT: f64 = 50.0;
/// DSRC keeps at least this hearing range, km.
const DSRC_RANGE_FLOOR_KM: f64 = 0.25;
/// Smallest inter-packet gap of either named regime, ms.
const IPG_FLOOR_MS: f64 = 100.0;

/// Resolved link characteristics at one density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Maximum hearing range, km.
    pub mhr_km: f64,
    /// Inter-packet gap, ms.
    pub ipg_ms: f64,
}

impl LinkParams {
    pub fn mhr_m(&self) -> f64 {
        self.mhr_km * 1000.0
    }

    pub fn ipg_s(&self) -> f64 {
        self.ipg_ms / 1000.0
    }
}

/// A communication regime: either one of the two named density-dependent
/// models or a fixed (range, interval) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProtocolModel {
    Cv2x,
    Dsrc,
    Custom { mhr_km: f64, ipg_ms: f64 },
}

impl ProtocolModel {
    pub fn custom(mhr_km: f64, ipg_ms: f64) -> Result<Self> {
        if !(mhr_km.is_finite() && mhr_km >= 0.0) {
            return Err(domain(format!("custom hearing range must be >= 0 km, got {mhr_km}")));
        }
        if !(ipg_ms.is_finite() && ipg_ms > 0.0) {
            return Err(domain(format!("custom packet gap must be > 0 ms, got {ipg_ms}")));
        }
        Ok(ProtocolModel::Custom { mhr_km, ipg_ms })
    }

    /// Bare family name: `CV2X`, `DSRC` or `CUSTOM`.
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolModel::Cv2x => "CV2X",
            ProtocolModel::Dsrc => "DSRC",
            ProtocolModel::Custom { .. } => "CUSTOM",
        }
    }

    /// Sort rank used in reports: C-V2X, then DSRC, then custom pairs.
    pub fn rank(&self) -> u8 {
        match self {
            ProtocolModel::Cv2x => 0,
            ProtocolModel::Dsrc => 1,
            ProtocolModel::Custom { .. } => 2,
        }
    }

    /// Resolves the (hearing range, packet gap) pair at `density` veh/h.
    pub fn params(&self, density: f64) -> Result<LinkParams> {
        if !(density.is_finite() && density > 0.0) {
            return Err(domain(format!("density must be > 0, got {density}")));
        }
        let fitted_range = CV2X_RANGE_DENSITY_PRODUCT / density;
        Ok(match *self {
            ProtocolModel::Cv2x => LinkParams { mhr_km: fitted_range, ipg_ms: IPG_FLOOR_MS },
            ProtocolModel::Dsrc => LinkParams { mhr_km: fitted_range.max(DSRC_RANGE_FLOOR_KM), ipg_ms: (density / 2.0).max(IPG_FLOOR_MS) },
            ProtocolModel::Custom { mhr_km, ipg_ms } => LinkParams { mhr_km, ipg_ms },
        })
    }
}

/// Free function form of [`ProtocolModel::params`].
pub fn protocol_params(protocol: ProtocolModel, density: f64) -> Result<LinkParams> {
    protocol.params(density)
}

/// `CV2X`, `DSRC`, or `CUSTOM(<mhr>km;<ipg>ms)`; the custom form carries its
/// parameters so result rows stay distinguishable.
impl fmt::Display for ProtocolModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolModel::Custom { mhr_km, ipg_ms } => write!(f, "CUSTOM({mhr_km:.4}km;{ipg_ms:.4}ms)"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for ProtocolModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "cv2x" | "c-v2x" => return Ok(ProtocolModel::Cv2x),
            "dsrc" => return Ok(ProtocolModel::Dsrc),
            _ => {}
        }
        let inner =
            t.strip_prefix("CUSTOM(").and_then(|r| r.strip_suffix("ms)")).ok_or_else(|| Error::Parse(format!("unknown protocol `{s}`")))?;
        let (mhr, ipg) = inner.split_once("km;").ok_or_else(|| Error::Parse(format!("malformed custom protocol `{s}`")))?;
        let num = |x: &str| x.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{x}` in `{s}`")));
        ProtocolModel::custom(num(mhr)?, num(ipg)?)
    }
}
