//! Coupled Haar families `U_j = V_j B_j V_j*` realized next to the reference
//! diagonal `A = diag(1, ζ, …, ζ^{n−1})`, `ζ = e^{2πi/n}`.
//!
//! For each member, independent Haar unitaries `X_j`, `Y_j` are drawn, `X_j` is
//! diagonalized as `W_j B_j W_j*` with phases sorted in `[0, 2π)`, and
//! `U_j = Y_j X_j Y_j*`, `V_j = Y_j W_j`. Both `U_j` and `V_j` are Haar, the
//! identity `U_j = V_j B_j V_j*` is exact, and
//! `‖U_j − V_j A V_j*‖₂ = ‖B_j − A‖₂`.

use alloc::vec::Vec;

use rand::Rng;

use crate::haar::{in_arc_neighborhood, sample_haar_unitary, SpectralMeasure};
use crate::linalg::{c64, unitary_eigendecomposition, ComplexMatrix, UnitaryMatrix};
use crate::math::{cis, sqrt, TAU};
use crate::{Error, Result};

/// `A^(n) = diag(1, ζ_n, …, ζ_n^{n−1})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReferenceDiagonal {
    n: usize,
}

impl ReferenceDiagonal {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Phase of entry `t` (0-based): `2πt/n`.
    #[inline]
    pub fn phase(&self, t: usize) -> f64 {
        TAU * t as f64 / self.n as f64
    }

    #[inline]
    pub fn entry(&self, t: usize) -> c64 {
        cis(self.phase(t))
    }

    pub fn entries(&self) -> Vec<c64> {
        (0..self.n).map(|t| self.entry(t)).collect()
    }

    pub fn matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&self.entries()).expect("roots of unity are finite")
    }

    pub fn unitary(&self) -> UnitaryMatrix {
        let phases: Vec<f64> = (0..self.n).map(|t| self.phase(t)).collect();
        UnitaryMatrix::from_phases(&phases)
    }
}

/// Shorthand for `ReferenceDiagonal::new(n).matrix()`.
pub fn reference_diagonal(n: usize) -> ComplexMatrix {
    ReferenceDiagonal::new(n).matrix()
}

/// One member of a [`CoupledFamily`].
#[derive(Clone, Debug)]
pub struct CoupledMember {
    pub u: UnitaryMatrix,
    pub v: UnitaryMatrix,
    /// Sorted phases of the diagonal `B_j`.
    pub b_phases: Vec<f64>,
    /// `‖U_j − V_j A V_j*‖₂`, computed from the matrices.
    pub residual_two_norm: f64,
    /// `‖B_j − A‖₂`, computed from the phases.
    pub diag_distance_two_norm: f64,
    /// `‖B_j − A‖` (operator norm of a diagonal).
    pub diag_distance_op_norm: f64,
    /// `‖U_j − V_j B_j V_j*‖₂`.
    pub conjugation_defect: f64,
}

impl CoupledMember {
    pub fn b(&self) -> UnitaryMatrix {
        UnitaryMatrix::from_phases(&self.b_phases)
    }

    /// Spectrum of `U_j`, which equals that of `B_j`.
    pub fn spectral_measure(&self) -> SpectralMeasure {
        SpectralMeasure::new(self.b_phases.clone()).expect("phases come from the eigensolver")
    }
}

#[derive(Clone, Debug)]
pub struct CoupledFamily {
    pub n: usize,
    pub reference: ReferenceDiagonal,
    pub members: Vec<CoupledMember>,
}

impl CoupledFamily {
    pub fn m(&self) -> usize {
        self.members.len()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.residual_two_norm).collect()
    }

    pub fn u(&self) -> Vec<&UnitaryMatrix> {
        self.members.iter().map(|m| &m.u).collect()
    }

    pub fn v(&self) -> Vec<&UnitaryMatrix> {
        self.members.iter().map(|m| &m.v).collect()
    }

    /// Deterministic construction from given `X_j` (to diagonalize) and
    /// `Y_j` (to conjugate with).
    pub fn from_parts(xs: &[UnitaryMatrix], ys: &[UnitaryMatrix]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                found: ys.len(),
            });
        }
        let n = xs.first().map(|x| x.dim()).unwrap_or(0);
        let reference = ReferenceDiagonal::new(n);
        let a = reference.entries();
        let members = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| couple_member(x, y, &a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            reference,
            members,
        })
    }
}

fn couple_member(x: &UnitaryMatrix, y: &UnitaryMatrix, a: &[c64]) -> Result<CoupledMember> {
    let n = x.dim();
    if y.dim() != n || a.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.dim(),
        });
    }
    let sys = unitary_eigendecomposition(x)?;
    let (w, b_phases) = sys.into_parts();
    let b: Vec<c64> = b_phases.iter().map(|&p| cis(p)).collect();

    let u = UnitaryMatrix::from_trusted(y.conjugate(x)?);
    let v = UnitaryMatrix::from_trusted(y.try_mul(&w)?);
    let v_adj = v.adjoint();

    let vav = v.scale_columns(a).try_mul(&v_adj)?;
    let vbv = v.scale_columns(&b).try_mul(&v_adj)?;
    let residual_two_norm = u.two_norm_distance(&vav)?;
    let conjugation_defect = u.two_norm_distance(&vbv)?;

    let gaps = b.iter().zip(a).map(|(p, q)| (p - q).norm());
    let (mut sq, mut op) = (0.0, 0.0f64);
    for g in gaps {
        sq += g * g;
        op = op.max(g);
    }
    Ok(CoupledMember {
        u,
        v,
        b_phases,
        residual_two_norm,
        diag_distance_two_norm: sqrt(sq / n as f64),
        diag_distance_op_norm: op,
        conjugation_defect,
    })
}

/// Samples `m` coupled members. Draw order: `X_1, Y_1, X_2, Y_2, …`.
pub fn couple<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<CoupledFamily> {
    if n < 2 {
        return Err(Error::param("n", "coupling needs n >= 2"));
    }
    let mut xs = Vec::with_capacity(m);
    let mut ys = Vec::with_capacity(m);
    for _ in 0..m {
        xs.push(sample_haar_unitary(n, rng)?);
        ys.push(sample_haar_unitary(n, rng)?);
    }
    CoupledFamily::from_parts(&xs, &ys)
}

/// Per member: whether the spectrum of `U_j` lies in `O_k`, and `‖B_j − A‖`.
/// Whenever the flag is set the distance is at most `4π/k`.
pub fn residual_certificate(family: &CoupledFamily, k: usize) -> Result<Vec<(bool, f64)>> {
    family
        .members
        .iter()
        .map(|m| Ok((in_arc_neighborhood(&m.spectral_measure(), k)?, m.diag_distance_op_norm)))
        .collect()
}

/// `4π/k`, the operator-norm distance certified by membership in `O_k`.
pub fn diagonal_distance_bound(k: usize) -> f64 {
    2.0 * TAU / k as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::esd;
    use crate::RngStream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reference_diagonal_examples() {
        assert_eq!(reference_diagonal(1).get(0, 0), c64::new(1.0, 0.0));
        let a4 = reference_diagonal(4);
        let want = [c64::new(1., 0.), c64::new(0., 1.), c64::new(-1., 0.), c64::new(0., -1.)];
        for (t, w) in want.iter().enumerate() {
            assert!((a4.get(t, t) - w).norm() < 1e-15);
        }
        assert!(a4.is_diagonal());
    }

    #[test]
    fn reference_diagonal_power_traces_vanish() {
        let n = 360;
        let r = ReferenceDiagonal::new(n);
        for k in [1usize, 5, 7, 359] {
            // tr_n(A^k) = (1/n) Σ_t ζ^{tk}
            let tr: c64 = (0..n).map(|t| cis(r.phase((t * k) % n))).sum::<c64>() / n as f64;
            assert!(tr.norm() < 1e-12, "k = {k}: {tr}");
        }
        let a = r.matrix();
        let mut p = a.clone();
        for _ in 1..5 {
            p = &p * &a;
        }
        assert!(p.normalized_trace().norm() < 1e-12);
    }

    #[test]
    fn coupled_identities_hold() {
        let mut rng = RngStream::new(42, 0).generator();
        let fam = couple(24, 3, &mut rng).unwrap();
        assert_eq!(fam.m(), 3);
        for m in &fam.members {
            assert!(m.u.defect() < 1e-10);
            assert!(m.v.defect() < 1e-10);
            assert!(m.conjugation_defect < 1e-8);
            assert!((m.residual_two_norm - m.diag_distance_two_norm).abs() < 1e-8);
            // spectrum of U_j matches the stored phases
            let mu = esd(&m.u).unwrap();
            for (p, q) in mu.phases().iter().zip(&m.b_phases) {
                assert!((p - q).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn coupling_is_reproducible() {
        let a = couple(10, 2, &mut RngStream::new(5, 1).generator()).unwrap();
        let b = couple(10, 2, &mut RngStream::new(5, 1).generator()).unwrap();
        assert_eq!(a.residuals(), b.residuals());
        assert_eq!(a.members[1].v, b.members[1].v);
    }

    #[test]
    fn family_from_reference_diagonal_has_zero_distance() {
        let n = 32;
        let a = ReferenceDiagonal::new(n).unitary();
        let y = sample_haar_unitary(n, &mut RngStream::new(1, 1).generator()).unwrap();
        let fam = CoupledFamily::from_parts(&[a], &[y]).unwrap();
        let cert = residual_certificate(&fam, 4).unwrap();
        assert!(cert[0].1 < 1e-12);
        assert!(fam.members[0].residual_two_norm < 1e-12);
        // n = 4·8 puts atoms on arc endpoints; m = 8 > k = 4 keeps membership
        assert!(cert[0].0);
    }

    #[test]
    fn identity_family_fails_membership() {
        let n = 16;
        let y = sample_haar_unitary(n, &mut RngStream::new(1, 2).generator()).unwrap();
        let fam = CoupledFamily::from_parts(&[UnitaryMatrix::identity(n)], &[y]).unwrap();
        let cert = residual_certificate(&fam, 4).unwrap();
        assert!(!cert[0].0);
        assert_abs_diff_eq!(cert[0].1, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_tiny_dimension() {
        assert!(couple(1, 1, &mut RngStream::new(0, 0).generator()).is_err());
    }
}
