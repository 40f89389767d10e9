//! Scalar functions routed through `libm` so results do not depend on
//! whether the platform `std` is linked.

pub(crate) use core::f64::consts::{PI, TAU};

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// Argument of `re + i·im` in `[0, 2π)`.
#[inline]
pub(crate) fn phase(re: f64, im: f64) -> f64 {
    let mut p = libm::atan2(im, re);
    if p < 0.0 {
        p += TAU;
    }
    // atan2 of a value just below the positive real axis can round up to 2π.
    if p >= TAU {
        p = 0.0;
    }
    p
}

/// `e^{iθ}`.
#[inline]
pub(crate) fn cis(theta: f64) -> num_complex::Complex<f64> {
    num_complex::Complex::new(cos(theta), sin(theta))
}
