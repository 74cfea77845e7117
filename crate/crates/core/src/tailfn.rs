//! Scalar tail functions.
//!
//! `g(t) = e^t - t - 1` and `phi(t) = t / g(t)`. `phi` is the dimension-free
//! tail that replaces `e^{-t}` in every certificate of this crate; it is a
//! decreasing bijection of `(0, inf)` onto itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SERIES_CUTOFF: f64 = 1e-3;
const LOG_SPACE_CUTOFF: f64 = 700.0;
const MAX_BISECTIONS: usize = 200;

/// A probability bound in `[0, 1]` together with the unclamped value it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailProbability {
    pub value: f64,
    pub raw: f64,
}

impl TailProbability {
    pub fn from_raw(raw: f64) -> Self {
        debug_assert!(raw >= 0.0 || raw.is_nan());
        let raw = raw.max(0.0);
        TailProbability {
            value: raw.min(1.0),
            raw,
        }
    }

    pub fn is_vacuous(&self) -> bool {
        self.raw >= 1.0
    }
}

/// `e^t - t - 1`, with a Taylor branch near zero.
pub fn g(t: f64) -> f64 {
    if t.abs() < SERIES_CUTOFF {
        // t^2/2 + t^3/6 + t^4/24 + t^5/120
        let t2 = t * t;
        t2 * (0.5 + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t / 120.0)))
    } else {
        t.exp_m1() - t
    }
}

/// `t / (e^t - t - 1)` for `t > 0`.
pub fn phi(t: f64) -> Result<f64> {
    if !(t > 0.0) || t.is_nan() {
        return Err(Error::domain(format!("phi requires t > 0, got {t}")));
    }
    Ok(phi_unchecked(t))
}

pub(crate) fn phi_unchecked(t: f64) -> f64 {
    if t == f64::INFINITY {
        0.0
    } else if t > LOG_SPACE_CUTOFF {
        // t e^{-t} / (1 - (t+1) e^{-t}); the denominator is 1 to machine precision
        (t.ln() - t).exp()
    } else {
        t / g(t)
    }
}

/// The unique `t > 0` with `phi(t) = p`.
///
/// Brackets by doubling from `[1e-12, 1]` and then bisects.
pub fn invert_phi(p: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::domain(format!("invert_phi requires finite p > 0, got {p}")));
    }
    let mut lo = 1e-12;
    let mut hi = 1.0;
    while phi_unchecked(lo) < p {
        lo *= 0.5;
        if lo == 0.0 {
            return Err(Error::domain(format!("p = {p} is beyond the representable range")));
        }
    }
    while phi_unchecked(hi) > p {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::domain(format!("p = {p} is beyond the representable range")));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi_unchecked(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick whichever endpoint lands closer
    let err = |t: f64| (phi_unchecked(t) - p).abs();
    Ok(if err(lo) <= err(hi) { lo } else { hi })
}
