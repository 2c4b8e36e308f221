//! R (0–100) ↔ MOS (1–5) conversion.
//!
//! MOS = 1 + 0.035·R + R·(R − 60)·(100 − R)·7·10⁻⁶ on R ∈ [0, 100]. The cubic
//! dips below 1 for R < 80 − √5400 ≈ 6.515, so values there are clamped to 1;
//! above that point the map is strictly increasing up to MOS 4.5 at R = 100.
//! The inverse keeps a bisection bracket and takes Newton steps inside it.

use crate::error::{Error, Result};

/// Lowest R at which the cubic returns to MOS 1.
pub fn r_floor() -> f64 {
    80.0 - 5400f64.sqrt()
}

pub const MOS_AT_R_MAX: f64 = 4.5;

const BISECTION_TOLERANCE: f64 = 1e-9;

fn cubic(r: f64) -> f64 {
    1.0 + 0.035 * r + r * (r - 60.0) * (100.0 - r) * 7e-6
}

// Positive on [r_floor, 100], smallest (≈ 0.0067) at the two ends.
fn cubic_slope(r: f64) -> f64 {
    0.035 + 7e-6 * (-3.0 * r * r + 320.0 * r - 6000.0)
}

pub fn mos_from_r(r: f64) -> Result<f64> {
    if !r.is_finite() {
        return Err(Error::InvalidInput(format!("R value {r} is not finite")));
    }
    let r = r.clamp(0.0, 100.0);
    Ok(cubic(r).max(1.0))
}

pub fn r_from_mos(mos: f64) -> Result<f64> {
    if !mos.is_finite() {
        return Err(Error::InvalidInput(format!(
            "MOS value {mos} is not finite"
        )));
    }
    let target = mos.clamp(1.0, MOS_AT_R_MAX);
    let (mut lo, mut hi) = (r_floor(), 100.0);
    if target <= 1.0 {
        return Ok(lo);
    }
    if target >= MOS_AT_R_MAX {
        return Ok(hi);
    }
    let mut r = 0.5 * (lo + hi);
    while hi - lo > BISECTION_TOLERANCE {
        let err = cubic(r) - target;
        if err == 0.0 {
            return Ok(r);
        }
        if err < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let step = r - err / cubic_slope(r);
        let next = if step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
        if (next - r).abs() <= f64::EPSILON * r {
            return Ok(next);
        }
        r = next;
    }
    Ok(r)
}
