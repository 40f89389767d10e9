use crate::band::covering_log_bound;
use crate::math::{ln, sqrt};
use crate::{Error, Result};

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, alloc::format!("must be positive and finite, got {x}")))
    }
}

/// `4kε + 2k√(12kδ)`: uniform error for centered alternating moments of length
/// `k` when each operand is within `ε` of an element of a `δ`-covered set.
pub fn freeness_error_budget(k: usize, epsilon: f64, delta: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k", "word length must be >= 1"));
    }
    positive("epsilon", epsilon)?;
    positive("delta", delta)?;
    let k = k as f64;
    Ok(4.0 * k * epsilon + 2.0 * k * sqrt(12.0 * k * delta))
}

/// `4k/m + 2k√(24k·log(3Rm)/m)`, the budget at `ε = 1/m` with the covering
/// choice `δ = 2ε·log(3R/ε)`. Requires `3Rm > 1`.
pub fn specialized_budget(k: usize, m: usize, radius: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k", "word length must be >= 1"));
    }
    if m == 0 {
        return Err(Error::param("m", "must be >= 1"));
    }
    positive("radius", radius)?;
    let (kf, mf) = (k as f64, m as f64);
    let log = ln(3.0 * radius * mf);
    if !(log > 0.0) {
        return Err(Error::param("radius", "need 3Rm > 1"));
    }
    Ok(4.0 * kf / mf + 2.0 * kf * sqrt(24.0 * kf * log / mf))
}

/// Budget for operands in the `ε`-band ball of radius `R`, with
/// `δ = 2ε·log(3R/ε)`.
pub fn band_freeness_budget(k: usize, epsilon: f64, radius: f64) -> Result<f64> {
    freeness_error_budget(k, epsilon, covering_log_bound(epsilon, radius)?)
}
