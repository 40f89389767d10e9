//! Circular band matrices `D_ε^(n) = {B : B_ij = 0 when d_n(i,j) > εn}`, the
//! block projection onto them, and covering-number bookkeeping.

use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::coupling::ReferenceDiagonal;
use crate::linalg::{c64, ComplexMatrix};
use crate::math::{exp, floor, ln, sqrt, PI};
use crate::{Error, Result};

/// `d_n(i, j) = min(|i − j|, n − |i − j|)` for 1-based indices.
pub fn circular_distance(i: usize, j: usize, n: usize) -> Result<usize> {
    for idx in [i, j] {
        if idx == 0 || idx > n {
            return Err(Error::IndexOutOfRange { index: idx, n });
        }
    }
    Ok(cyclic(i, j, n))
}

#[inline]
fn cyclic(i: usize, j: usize, n: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(n - d)
}

/// `⌊εn⌋` as evaluated in double precision.
pub fn band_half_width(n: usize, epsilon: f64) -> usize {
    let w = floor(epsilon * n as f64);
    if w >= n as f64 {
        n
    } else {
        w as usize
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param("epsilon", "must be positive and finite"));
    }
    Ok(())
}

/// Index pattern of `D_ε^(n)`: `(i, j)` allowed iff `d_n(i, j) ≤ ⌊εn⌋`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandPattern {
    n: usize,
    epsilon: f64,
    width: usize,
}

impl BandPattern {
    pub fn new(n: usize, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self {
            n,
            epsilon,
            width: band_half_width(n, epsilon),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn half_width(&self) -> usize {
        self.width
    }

    /// 0-based indices.
    #[inline]
    pub fn allows(&self, i: usize, j: usize) -> bool {
        cyclic(i, j, self.n) <= self.width
    }

    /// Every entry outside the band is exactly zero.
    pub fn contains(&self, m: &ComplexMatrix) -> bool {
        m.dim() == self.n
            && m.entries()
                .all(|(i, j, z)| self.allows(i, j) || (z.re == 0.0 && z.im == 0.0))
    }
}

/// Consecutive blocks of size `m = ⌊nε/2⌋` plus a remainder block of size
/// `r = n mod m` when `r > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    pub m: usize,
    pub q: usize,
    pub r: usize,
    blocks: Vec<Range<usize>>,
    owner: Vec<usize>,
}

impl BlockPartition {
    /// `None` when `nε < 2` (no block of size at least one).
    pub fn new(n: usize, epsilon: f64) -> Result<Option<Self>> {
        check_epsilon(epsilon)?;
        let m = floor(n as f64 * epsilon / 2.0);
        if m < 1.0 {
            return Ok(None);
        }
        let m = if m >= n as f64 { n } else { m as usize };
        let q = n / m;
        let r = n % m;
        let mut blocks: Vec<Range<usize>> = (0..q).map(|t| t * m..(t + 1) * m).collect();
        if r > 0 {
            blocks.push(q * m..n);
        }
        let mut owner = alloc::vec![0; n];
        for (t, b) in blocks.iter().enumerate() {
            for i in b.clone() {
                owner[i] = t;
            }
        }
        Ok(Some(Self {
            m,
            q,
            r,
            blocks,
            owner,
        }))
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Block containing 0-based index `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.owner[i]
    }

    /// Blocks `s`, `t` are equal or cyclically adjacent.
    pub fn adjacent(&self, s: usize, t: usize) -> bool {
        cyclic(s, t, self.num_blocks()) <= 1
    }
}

/// Projection of `b` into `D_ε^(n)` with
/// `‖b − result‖₂ ≤ (8√π/ε)‖[A, b]‖₂` and `‖result‖ ≤ 3‖b‖`.
///
/// For `nε < 2` the result is the diagonal part of `b`. Otherwise it is
/// `Σ P_s b P_t` over block pairs with cyclic block distance at most one.
pub fn band_project(
    b: &ComplexMatrix,
    epsilon: f64,
    reference: &ReferenceDiagonal,
) -> Result<ComplexMatrix> {
    let n = b.dim();
    if reference.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            found: n,
        });
    }
    let zero = c64::new(0.0, 0.0);
    match BlockPartition::new(n, epsilon)? {
        None => ComplexMatrix::from_fn(n, |i, j| if i == j { b.get(i, j) } else { zero }),
        Some(p) => ComplexMatrix::from_fn(n, |i, j| {
            if p.adjacent(p.block_of(i), p.block_of(j)) {
                b.get(i, j)
            } else {
                zero
            }
        }),
    }
}

/// `8√π/ε`.
pub fn band_commutator_constant(epsilon: f64) -> f64 {
    8.0 * sqrt(PI) / epsilon
}

/// Number of index pairs `(i, j)` with `d_n(i, j) ≤ εn`.
pub fn band_entry_count(n: usize, epsilon: f64) -> Result<u64> {
    check_epsilon(epsilon)?;
    let w = band_half_width(n, epsilon) as u64;
    let n = n as u64;
    let per_row = (2 * w + 1).min(n);
    Ok(n * per_row)
}

/// `2ε·log(3R/ε)`, an upper bound on `(1/n²)·log K_ε` for the `‖·‖₂`-ball of
/// radius `R` in `D_ε^(n)`.
pub fn covering_log_bound(epsilon: f64, radius: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !(epsilon < radius) {
        return Err(Error::param("epsilon", "need 0 < epsilon < R"));
    }
    Ok(2.0 * epsilon * ln(3.0 * radius / epsilon))
}

/// Greedy `ε`-net in input order: a point joins the net when its `‖·‖₂`
/// distance to every earlier net point exceeds `ε`. Net points are pairwise
/// more than `ε` apart and every input lies within `ε` of the net.
pub fn greedy_net_indices(points: &[ComplexMatrix], epsilon: f64) -> Result<Vec<usize>> {
    check_epsilon(epsilon)?;
    let mut net: Vec<usize> = Vec::new();
    for (idx, p) in points.iter().enumerate() {
        let mut far = true;
        for &k in &net {
            if p.two_norm_distance(&points[k])? <= epsilon {
                far = false;
                break;
            }
        }
        if far {
            net.push(idx);
        }
    }
    Ok(net)
}

pub fn greedy_net(points: &[ComplexMatrix], epsilon: f64) -> Result<Vec<ComplexMatrix>> {
    Ok(greedy_net_indices(points, epsilon)?
        .into_iter()
        .map(|i| points[i].clone())
        .collect())
}

/// Uniform sample from `{X ∈ D_ε^(n) : ‖X‖₂ ≤ radius}`.
pub fn sample_band_ball<R: Rng + ?Sized>(
    pattern: &BandPattern,
    radius: f64,
    rng: &mut R,
) -> ComplexMatrix {
    let n = pattern.dim();
    let mut entries = alloc::vec![c64::new(0.0, 0.0); n * n];
    let mut sq = 0.0;
    let mut real_dim = 0usize;
    for i in 0..n {
        for j in 0..n {
            if pattern.allows(i, j) {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                sq += re * re + im * im;
                real_dim += 2;
                entries[i * n + j] = c64::new(re, im);
            }
        }
    }
    let u: f64 = rng.gen();
    // direction uniform on the sphere, radius ∝ u^{1/d}; ‖X‖₂² = Σ|x|²/n
    let target = radius * exp(ln(u) / real_dim as f64);
    let scale = target * sqrt(n as f64) / sqrt(sq);
    let m = ComplexMatrix::from_row_major(&entries).expect("square by construction");
    m.scale(c64::new(scale, 0.0))
}
