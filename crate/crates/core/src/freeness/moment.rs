//! Mixed normalized traces of centered alternating products.

use alloc::vec::Vec;

use super::{NCPolynomial, WordSpec};
use crate::linalg::{c64, ComplexMatrix, UnitaryMatrix};
use crate::{Error, Result};

/// `tr_n(P·Q)` without forming the product.
pub fn trace_of_product(p: &ComplexMatrix, q: &ComplexMatrix) -> Result<c64> {
    let n = p.dim();
    if q.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: q.dim(),
        });
    }
    if n == 0 {
        return Ok(c64::new(0.0, 0.0));
    }
    let (p, q) = (p.as_faer(), q.as_faer());
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += p[(i, j)] * q[(j, i)];
        }
    }
    Ok(acc / n as f64)
}

/// `tr_n(M₁ M₂ ⋯ M_k)`, multiplied left to right.
pub fn product_trace(factors: &[&ComplexMatrix]) -> Result<c64> {
    match factors {
        [] => Err(Error::param("factors", "need at least one matrix")),
        [only] => Ok(only.normalized_trace()),
        [first, middle @ .., last] => {
            let mut acc = (*first).clone();
            for m in middle {
                acc = acc.try_mul(m)?;
            }
            trace_of_product(&acc, last)
        }
    }
}

fn check_word_against(word: &WordSpec, len: usize, available: usize) -> Result<()> {
    if len != word.len() {
        return Err(Error::DimensionMismatch {
            expected: word.len(),
            found: len,
        });
    }
    if word.max_index() > available {
        return Err(Error::IndexOutOfRange {
            index: word.max_index(),
            n: available,
        });
    }
    Ok(())
}

fn check_square(x: &ComplexMatrix, n: usize) -> Result<()> {
    if x.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.dim(),
        });
    }
    Ok(())
}

/// `tr_n[ Π_t V_{i_t} (X_t − tr_n(X_t)) V_{i_t}* ]`, product left to right.
pub fn centered_word_moment(
    v: &[UnitaryMatrix],
    x: &[ComplexMatrix],
    word: &WordSpec,
) -> Result<c64> {
    check_word_against(word, x.len(), v.len())?;
    if word.len() == 1 {
        check_square(&x[0], v[word.indices()[0] - 1].dim())?;
        // a single centered factor has trace zero exactly
        return Ok(c64::new(0.0, 0.0));
    }
    let factors = word
        .indices()
        .iter()
        .zip(x)
        .map(|(&i, xt)| v[i - 1].conjugate(&xt.centered()))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&ComplexMatrix> = factors.iter().collect();
    product_trace(&refs)
}

/// `tr_n[ Π_t (p_t(B_{i_t}) − tr_n p_t(B_{i_t})) ]` where `B_i` is a tuple of
/// matrices and `p_t` reads its letters from that tuple.
pub fn polynomial_word_moment(
    b: &[Vec<ComplexMatrix>],
    word: &WordSpec,
    polys: &[NCPolynomial],
) -> Result<c64> {
    check_word_against(word, polys.len(), b.len())?;
    if word.len() == 1 {
        let tuple: Vec<&ComplexMatrix> = b[word.indices()[0] - 1].iter().collect();
        polys[0].evaluate(&tuple)?;
        return Ok(c64::new(0.0, 0.0));
    }
    let factors = word
        .indices()
        .iter()
        .zip(polys)
        .map(|(&i, p)| {
            let tuple: Vec<&ComplexMatrix> = b[i - 1].iter().collect();
            Ok(p.evaluate(&tuple)?.centered())
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&ComplexMatrix> = factors.iter().collect();
    product_trace(&refs)
}

/// `Π_t 2‖X_t‖`: centering at most doubles the operator norm and
/// `|tr_n(M)| ≤ ‖M‖`.
pub fn crude_moment_bound(x: &[ComplexMatrix]) -> Result<f64> {
    x.iter()
        .try_fold(1.0, |acc, m| Ok(acc * 2.0 * m.operator_norm()?))
}

/// Same bound for polynomial factors evaluated on tuples of contractions,
/// using `‖p(B)‖ ≤ Σ|coef|`.
pub fn crude_polynomial_bound(polys: &[NCPolynomial]) -> f64 {
    polys.iter().map(|p| 2.0 * p.coefficient_l1()).product()
}
