//! Ginibre and Haar sampling, empirical spectral distributions, and the
//! arc-mass neighbourhood `O_k` of the uniform law on the circle.

use alloc::vec::Vec;

use faer::Mat;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c64, unitary_eigendecomposition, ComplexMatrix, UnitaryMatrix};
use crate::math::{floor, hypot, sqrt, TAU};
use crate::{Error, Result};

/// Number of fresh Ginibre draws attempted before giving up on a QR with a
/// vanishing diagonal.
pub const HAAR_MAX_RETRIES: usize = 8;

/// Atoms within this many radians of an arc endpoint count as lying on it.
pub const ARC_BOUNDARY_TOL: f64 = 1e-12;

/// `n×n` matrix of i.i.d. standard complex Gaussians (real and imaginary parts
/// independent, mean 0, variance 1/2). Entries are drawn row-major, real part
/// first.
pub fn sample_ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let scale = sqrt(0.5);
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        data.push(c64::new(re * scale, im * scale));
    }
    let m = Mat::from_fn(n, n, |i, j| data[i * n + j]);
    ComplexMatrix::from_faer_trusted(m)
}

/// Haar-distributed unitary: `Q · diag(R_jj / |R_jj|)` from the QR
/// factorization of a Ginibre sample.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UnitaryMatrix> {
    if n == 0 {
        return Err(Error::param("n", "dimension must be positive"));
    }
    let mut worst = 0.0;
    for _ in 0..HAAR_MAX_RETRIES {
        let g = sample_ginibre(n, rng);
        let qr = g.as_faer().qr();
        let r = qr.R();
        let diag: Vec<f64> = (0..n).map(|j| hypot(r[(j, j)].re, r[(j, j)].im)).collect();
        let scale = diag.iter().copied().fold(0.0, f64::max);
        let floor_value = f64::EPSILON * n as f64 * scale;
        let smallest = diag.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smallest > floor_value) {
            worst = smallest;
            continue;
        }
        let phases: Vec<c64> = (0..n).map(|j| r[(j, j)] / diag[j]).collect();
        let q = qr.compute_Q();
        let u = Mat::from_fn(n, n, |i, j| q[(i, j)] * phases[j]);
        return UnitaryMatrix::new(ComplexMatrix::from_faer_trusted(u));
    }
    Err(Error::Numerical {
        what: "Ginibre QR (vanishing R diagonal)",
        residual: worst,
    })
}

/// `m` independent Haar unitaries drawn sequentially from `rng`.
pub fn sample_haar_family<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<UnitaryMatrix>> {
    (0..m).map(|_| sample_haar_unitary(n, rng)).collect()
}

/// Uniform probability measure on `n` phases in `[0, 2π)`, stored sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasure {
    phases: Vec<f64>,
}

impl SpectralMeasure {
    pub fn new(mut phases: Vec<f64>) -> Result<Self> {
        if let Some(bad) = phases.iter().find(|p| !(0.0..TAU).contains(*p)) {
            return Err(Error::param(
                "phase",
                alloc::format!("{bad} is outside [0, 2π)"),
            ));
        }
        phases.sort_by(f64::total_cmp);
        Ok(Self { phases })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// Empirical spectral distribution of a unitary.
pub fn esd(u: &UnitaryMatrix) -> Result<SpectralMeasure> {
    let sys = unitary_eigendecomposition(u)?;
    Ok(SpectralMeasure {
        phases: sys.into_parts().1,
    })
}

/// Atom counts of one arc `I_{k,j} = [2π(j−1)/k, 2πj/k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ArcCount {
    /// Atoms strictly inside the arc.
    pub open: usize,
    /// Atoms in the closed arc, endpoints included.
    pub closed: usize,
}

/// Open and closed atom counts for the `k` arcs. An atom within
/// [`ARC_BOUNDARY_TOL`] of an endpoint counts for the closed arc of both
/// neighbours and the open arc of neither.
pub fn arc_counts(mu: &SpectralMeasure, k: usize) -> Vec<ArcCount> {
    let mut counts = alloc::vec![ArcCount::default(); k];
    if k == 0 {
        return counts;
    }
    let width = TAU / k as f64;
    for &p in &mu.phases {
        let j = (floor(p / width) as usize).min(k - 1);
        let lo = TAU * j as f64 / k as f64;
        let hi = TAU * (j + 1) as f64 / k as f64;
        if (p - lo).abs() <= ARC_BOUNDARY_TOL {
            // endpoint between arc j−1 and arc j
            counts[j].closed += 1;
            counts[(j + k - 1) % k].closed += 1;
        } else if (hi - p).abs() <= ARC_BOUNDARY_TOL {
            // endpoint between arc j and arc j+1 (2π wraps to arc 0)
            counts[j].closed += 1;
            counts[(j + 1) % k].closed += 1;
        } else {
            counts[j].open += 1;
            counts[j].closed += 1;
        }
    }
    counts
}

/// `μ ∈ O_k`: every arc has open mass `> 1/k − 1/k²` and closed mass
/// `< 1/k + 1/k²`. Compared in exact integer arithmetic.
pub fn in_arc_neighborhood(mu: &SpectralMeasure, k: usize) -> Result<bool> {
    if k < 2 {
        return Err(Error::param("k", "need k >= 2"));
    }
    let n = mu.len() as u128;
    let k2 = (k * k) as u128;
    let kk = k as u128;
    Ok(arc_counts(mu, k).iter().all(|c| {
        // open/n > (k−1)/k²  and  closed/n < (k+1)/k²
        (c.open as u128) * k2 > n * (kk - 1) && (c.closed as u128) * k2 < n * (kk + 1)
    }))
}
