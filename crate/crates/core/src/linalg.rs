//! Dense complex matrices with the normalized trace `tr_n = Tr / n` and the
//! normalized Hilbert–Schmidt norm `‖X‖₂ = tr_n(X*X)^{1/2}`.
//!
//! Storage and the heavy kernels (matrix product, QR, SVD, Schur) are
//! delegated to `faer`; everything the experiments rely on is re-checked here
//! (unitarity defects, eigendecomposition residuals).

use alloc::vec::Vec;
use core::ops::{Add, Deref, Mul, Sub};

use faer::{Mat, MatRef};

use crate::math::{cis, hypot, phase, sqrt};
use crate::{Error, Result, EIG_TOL, UNITARITY_TOL};

pub use faer::c64;

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
const ONE: c64 = c64 { re: 1.0, im: 0.0 };

/// Square complex matrix with finite entries.
///
/// Indices passed to [`ComplexMatrix::get`] and the constructors are 0-based.
#[derive(Clone, Debug)]
pub struct ComplexMatrix {
    mat: Mat<c64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            mat: Mat::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: Mat::identity(n, n),
        }
    }

    /// Builds `M[i][j] = f(i, j)`, rejecting non-finite entries.
    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> c64) -> Result<Self> {
        Self::from_faer(Mat::from_fn(n, n, f))
    }

    pub fn from_diagonal(diag: &[c64]) -> Result<Self> {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    /// Row-major entries; `entries.len()` must be a perfect square.
    pub fn from_row_major(entries: &[c64]) -> Result<Self> {
        let n = isqrt(entries.len());
        if n * n != entries.len() {
            return Err(Error::NotSquare {
                rows: entries.len(),
                cols: 1,
            });
        }
        Self::from_fn(n, |i, j| entries[i * n + j])
    }

    pub fn from_faer(mat: Mat<c64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        for j in 0..mat.ncols() {
            for i in 0..mat.nrows() {
                let z = mat[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { mat })
    }

    /// Wraps the result of arithmetic on finite operands without rescanning.
    pub(crate) fn from_faer_trusted(mat: Mat<c64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    pub fn as_faer(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.mat[(row, col)]
    }

    pub fn diagonal(&self) -> Vec<c64> {
        (0..self.dim()).map(|i| self.mat[(i, i)]).collect()
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| i == j || self.mat[(i, j)] == ZERO))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_faer_trusted(self.mat.adjoint().to_owned())
    }

    pub fn scale(&self, c: c64) -> Self {
        let n = self.dim();
        Self::from_faer_trusted(Mat::from_fn(n, n, |i, j| self.mat[(i, j)] * c))
    }

    /// `self − c·I`.
    pub fn shift(&self, c: c64) -> Self {
        let mut m = self.mat.clone();
        for i in 0..self.dim() {
            m[(i, i)] -= c;
        }
        Self::from_faer_trusted(m)
    }

    /// `self − tr_n(self)·I`.
    pub fn centered(&self) -> Self {
        self.shift(self.normalized_trace())
    }

    /// Multiplies column `j` by `d[j]`, i.e. `self · diag(d)`.
    pub fn scale_columns(&self, d: &[c64]) -> Self {
        let n = self.dim();
        assert_eq!(d.len(), n, "scale_columns: length mismatch");
        Self::from_faer_trusted(Mat::from_fn(n, n, |i, j| self.mat[(i, j)] * d[j]))
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        check_dims(self, rhs)?;
        Ok(Self::from_faer_trusted(&self.mat * &rhs.mat))
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        check_dims(self, rhs)?;
        Ok(Self::from_faer_trusted(&self.mat + &rhs.mat))
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        check_dims(self, rhs)?;
        Ok(Self::from_faer_trusted(&self.mat - &rhs.mat))
    }

    /// `tr_n(M) = (1/n) Σᵢ Mᵢᵢ`.
    pub fn normalized_trace(&self) -> c64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            acc += self.mat[(i, i)];
        }
        acc / n as f64
    }

    /// `‖M‖₂ = tr_n(M*M)^{1/2}`, the Frobenius norm divided by `√n`.
    pub fn two_norm(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        self.mat.norm_l2() / sqrt(n as f64)
    }

    /// `‖A − B‖₂` without materializing the difference.
    pub fn two_norm_distance(&self, other: &Self) -> Result<f64> {
        check_dims(self, other)?;
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += (self.mat[(i, j)] - other.mat[(i, j)]).norm_sqr();
            }
        }
        Ok(sqrt(acc / n as f64))
    }

    /// Largest singular value. Diagonal matrices are handled exactly.
    pub fn operator_norm(&self) -> Result<f64> {
        if self.dim() == 0 {
            return Ok(0.0);
        }
        if self.is_diagonal() {
            return Ok((0..self.dim())
                .map(|i| {
                    let z = self.mat[(i, i)];
                    hypot(z.re, z.im)
                })
                .fold(0.0, f64::max));
        }
        let s = self.mat.singular_values().map_err(|_| Error::Numerical {
            what: "singular value decomposition",
            residual: f64::NAN,
        })?;
        Ok(s.first().copied().unwrap_or(0.0))
    }

    /// Row-major iterator over `(row, col, value)`, 0-based.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, c64)> + '_ {
        let n = self.dim();
        (0..n).flat_map(move |i| (0..n).map(move |j| (i, j, self.mat[(i, j)])))
    }
}

impl PartialEq for ComplexMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.entries().zip(other.entries()).all(|(a, b)| a.2 == b.2)
    }
}

fn check_dims(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

fn isqrt(len: usize) -> usize {
    let mut n = sqrt(len as f64) as usize;
    while n * n > len {
        n -= 1;
    }
    while (n + 1) * (n + 1) <= len {
        n += 1;
    }
    n
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.try_mul(rhs).expect("matrix product")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: Self) -> ComplexMatrix {
        self.try_add(rhs).expect("matrix sum")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: Self) -> ComplexMatrix {
        self.try_sub(rhs).expect("matrix difference")
    }
}

/// `XY − YX`.
pub fn commutator(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    let xy = x.try_mul(y)?;
    let yx = y.try_mul(x)?;
    xy.try_sub(&yx)
}

/// `‖M*M − I‖₂`.
pub fn unitarity_defect(m: &ComplexMatrix) -> f64 {
    let gram = &m.adjoint() * m;
    gram.shift(ONE).two_norm()
}

/// A [`ComplexMatrix`] with `‖U*U − I‖₂` below a tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    inner: ComplexMatrix,
}

impl UnitaryMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(m, UNITARITY_TOL)
    }

    pub fn with_tolerance(m: ComplexMatrix, tol: f64) -> Result<Self> {
        let defect = unitarity_defect(&m);
        // NaN defect must fail too.
        if !(defect <= tol) {
            return Err(Error::NotUnitary { defect, tol });
        }
        Ok(Self { inner: m })
    }

    /// Diagonal unitary `diag(e^{iφ₀}, …)`.
    pub fn from_phases(phases: &[f64]) -> Self {
        let d: Vec<c64> = phases.iter().map(|&p| cis(p)).collect();
        Self {
            inner: ComplexMatrix::from_diagonal(&d).expect("finite phases"),
        }
    }

    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        Self { inner: m }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: ComplexMatrix::identity(n),
        }
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.inner
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    /// Product of two unitaries, re-verified against the default tolerance.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        Self::new(self.inner.try_mul(&rhs.inner)?)
    }

    /// `U X U*`.
    pub fn conjugate(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.inner.try_mul(x)?.try_mul(&self.inner.adjoint())
    }

    /// `U* X U`.
    pub fn conjugate_inverse(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.inner.adjoint().try_mul(x)?.try_mul(&self.inner)
    }

    pub fn defect(&self) -> f64 {
        unitarity_defect(&self.inner)
    }
}

impl Deref for UnitaryMatrix {
    type Target = ComplexMatrix;

    fn deref(&self) -> &ComplexMatrix {
        &self.inner
    }
}

/// `U = W · diag(e^{iφ}) · W*` with phases sorted ascending in `[0, 2π)`.
#[derive(Clone, Debug)]
pub struct UnitaryEigenSystem {
    w: UnitaryMatrix,
    phases: Vec<f64>,
    residual: f64,
}

impl UnitaryEigenSystem {
    pub fn eigenvectors(&self) -> &UnitaryMatrix {
        &self.w
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn eigenvalues(&self) -> Vec<c64> {
        self.phases.iter().map(|&p| cis(p)).collect()
    }

    /// The sorted diagonal `diag(e^{iφ₁}, …, e^{iφₙ})`.
    pub fn diagonal(&self) -> UnitaryMatrix {
        UnitaryMatrix::from_phases(&self.phases)
    }

    /// `‖U − W D W*‖₂` measured when the system was built.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn into_parts(self) -> (UnitaryMatrix, Vec<f64>) {
        (self.w, self.phases)
    }
}

pub fn unitary_eigendecomposition(u: &UnitaryMatrix) -> Result<UnitaryEigenSystem> {
    unitary_eigendecomposition_with_tolerance(u, EIG_TOL)
}

/// Normal-matrix eigensolver followed by phase extraction, a stable sort of
/// the columns by phase, and QR re-orthonormalization of the eigenvectors.
///
/// Ties in phase keep the eigensolver's output order. The reconstruction
/// residual `‖U − W D W*‖₂` is checked against `eig_tol`.
pub fn unitary_eigendecomposition_with_tolerance(
    u: &UnitaryMatrix,
    eig_tol: f64,
) -> Result<UnitaryEigenSystem> {
    let n = u.dim();
    let evd = u.as_faer().eigen().map_err(|_| Error::Numerical {
        what: "eigendecomposition",
        residual: f64::NAN,
    })?;
    let values = evd.S().column_vector();
    let vectors = evd.U();

    let raw_phases: Vec<f64> = (0..n).map(|i| phase(values[i].re, values[i].im)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw_phases[a].total_cmp(&raw_phases[b]));
    let phases: Vec<f64> = order.iter().map(|&i| raw_phases[i]).collect();

    let sorted = Mat::<c64>::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    let w = orthonormalize_columns(&sorted);
    let w = UnitaryMatrix::new(w).map_err(|e| match e {
        Error::NotUnitary { defect, .. } => Error::Numerical {
            what: "eigenvector orthonormalization",
            residual: defect,
        },
        other => other,
    })?;

    let d: Vec<c64> = phases.iter().map(|&p| cis(p)).collect();
    let rebuilt = w.scale_columns(&d).try_mul(&w.adjoint())?;
    let residual = u.two_norm_distance(&rebuilt)?;
    if !(residual <= eig_tol) {
        return Err(Error::Numerical {
            what: "eigendecomposition reconstruction",
            residual,
        });
    }
    Ok(UnitaryEigenSystem { w, phases, residual })
}

/// Q factor of `m` with columns rotated so that `R` has a positive diagonal.
/// Columns that are already orthonormal are reproduced up to rounding.
pub(crate) fn orthonormalize_columns(m: &Mat<c64>) -> ComplexMatrix {
    let n = m.nrows();
    let qr = m.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let signs: Vec<c64> = (0..n)
        .map(|j| {
            let rjj = r[(j, j)];
            let a = hypot(rjj.re, rjj.im);
            if a > 0.0 {
                rjj / a
            } else {
                ONE
            }
        })
        .collect();
    ComplexMatrix::from_faer_trusted(Mat::from_fn(n, n, |i, j| q[(i, j)] * signs[j]))
}
