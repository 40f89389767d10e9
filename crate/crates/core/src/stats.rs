//! Summary statistics used by the experiment reports.

use alloc::vec::Vec;

use crate::math::{ln, sqrt};

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; NaN below two samples.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    sqrt(variance(xs) / xs.len() as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

pub fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Least-squares slope of `ln y` against `ln x`. Points with a nonpositive
/// coordinate are skipped; NaN if fewer than two remain.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (ln(*x), ln(*y)))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Distance from the observed proportion `hits / trials` to the upper end of
/// its Wilson score interval at normal quantile `z`. Positive even when
/// `hits == 0`.
pub fn wilson_upper_radius(hits: usize, trials: usize, z: f64) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let t = trials as f64;
    let p = hits as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let centre = (p + z2 / (2.0 * t)) / denom;
    let half = z * sqrt(p * (1.0 - p) / t + z2 / (4.0 * t * t)) / denom;
    (centre + half - p).max(0.0)
}

/// Kolmogorov distance between the empirical law of `phases` (each in
/// `[0, 2π)`) and the uniform law on the circle, parametrized from 0.
pub fn kolmogorov_to_uniform(phases: &[f64]) -> f64 {
    let n = phases.len();
    if n == 0 {
        return f64::NAN;
    }
    let mut v = phases.to_vec();
    v.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for (i, p) in v.iter().enumerate() {
        let f = p / core::f64::consts::TAU;
        d = d.max((i as f64 + 1.0) / n as f64 - f).max(f - i as f64 / n as f64);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn basic_moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert_abs_diff_eq!(variance(&xs), 5.0 / 3.0, epsilon = 1e-15);
        assert_eq!(median(&xs), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(max(&xs), 4.0);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [64.0, 128.0, 256.0, 512.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        assert_abs_diff_eq!(log_log_slope(&xs, &ys), -1.5, epsilon = 1e-12);
    }

    #[test]
    fn wilson_radius_is_positive_at_zero_hits() {
        let r = wilson_upper_radius(0, 10_000, Z_99);
        // z²/(N+z²)
        assert_abs_diff_eq!(r, Z_99 * Z_99 / (10_000.0 + Z_99 * Z_99), epsilon = 1e-15);
        assert!(wilson_upper_radius(500, 1000, Z_99) > 0.0);
    }

    #[test]
    fn kolmogorov_of_even_grid() {
        let n = 100;
        let ps: Vec<f64> = (0..n).map(|t| core::f64::consts::TAU * t as f64 / n as f64).collect();
        assert_abs_diff_eq!(kolmogorov_to_uniform(&ps), 1.0 / n as f64, epsilon = 1e-12);
        assert_abs_diff_eq!(kolmogorov_to_uniform(&[0.0; 5]), 1.0, epsilon = 1e-12);
    }
}
