//! Noncommutative *-polynomials in letters `x1, x2, …` and their adjoints.
//!
//! Text syntax (prefix / Polish notation, whitespace separated; parentheses
//! are accepted as separators and otherwise ignored):
//!
//! ```text
//! expr   := scalar | letter | "+" expr expr | "-" expr expr | "*" expr expr
//! letter := "x" <index ≥ 1> [ "*" ]          e.g. x1, x2*
//! scalar := <real>                            e.g. 2, -0.5, 1e-3
//!         | <real> "i" | "i"                  e.g. 0.5i, -2i
//! ```
//!
//! `+ * x1 x1 * 0.5 x2*` is `x1² + 0.5·x2*`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{c64, ComplexMatrix};
use crate::{Error, Result};

/// One letter of a monomial, `x_{index+1}` or its adjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    /// 0-based position in the evaluated tuple.
    pub index: usize,
    pub adjoint: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coef: c64,
    /// Empty word is the identity.
    pub word: Vec<Letter>,
}

/// Finite sum of coefficient × monomial; like monomials are merged in order of
/// first appearance.
#[derive(Clone, Debug, PartialEq)]
pub struct NCPolynomial {
    terms: Vec<Term>,
}

impl NCPolynomial {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: c64) -> Self {
        Self::from_terms(alloc::vec![Term {
            coef: c,
            word: Vec::new()
        }])
    }

    /// `x_{index+1}` (0-based index).
    pub fn letter(index: usize, adjoint: bool) -> Self {
        Self::from_terms(alloc::vec![Term {
            coef: c64::new(1.0, 0.0),
            word: alloc::vec![Letter { index, adjoint }],
        }])
    }

    /// The polynomial `x1`.
    pub fn identity_letter() -> Self {
        Self::letter(0, false)
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            if let Some(existing) = merged.iter_mut().find(|m| m.word == t.word) {
                existing.coef += t.coef;
            } else {
                merged.push(t);
            }
        }
        Self { terms: merged }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::from_terms(terms)
    }

    pub fn scale(&self, c: c64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| Term {
                    coef: t.coef * c,
                    word: t.word.clone(),
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut word = a.word.clone();
                word.extend_from_slice(&b.word);
                terms.push(Term {
                    coef: a.coef * b.coef,
                    word,
                });
            }
        }
        Self::from_terms(terms)
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.word.len()).max().unwrap_or(0)
    }

    /// Number of tuple entries the polynomial reads (`1 + max letter index`).
    pub fn arity(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.word.iter())
            .map(|l| l.index + 1)
            .max()
            .unwrap_or(0)
    }

    /// `Σ |coef|`, which bounds `‖p(X)‖` whenever every `‖X_i‖ ≤ 1`.
    pub fn coefficient_l1(&self) -> f64 {
        self.terms.iter().map(|t| t.coef.norm()).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// Evaluates on a tuple of equally sized matrices. Monomials are
    /// multiplied left to right.
    pub fn evaluate(&self, tuple: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
        let arity = self.arity();
        if tuple.len() < arity {
            return Err(Error::param(
                "polynomial",
                alloc::format!("reads {arity} letters but the tuple has {}", tuple.len()),
            ));
        }
        let n = match tuple.first() {
            Some(m) => m.dim(),
            None => {
                return Err(Error::param("tuple", "cannot evaluate on an empty tuple"));
            }
        };
        if let Some(bad) = tuple.iter().find(|m| m.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.dim(),
            });
        }
        let adjoints: Vec<Option<ComplexMatrix>> = (0..arity)
            .map(|i| {
                let used = self
                    .terms
                    .iter()
                    .any(|t| t.word.iter().any(|l| l.index == i && l.adjoint));
                used.then(|| tuple[i].adjoint())
            })
            .collect();
        let letter = |l: &Letter| -> &ComplexMatrix {
            if l.adjoint {
                adjoints[l.index].as_ref().expect("adjoint cached")
            } else {
                tuple[l.index]
            }
        };

        let mut acc = ComplexMatrix::zeros(n);
        for t in &self.terms {
            let mono = match t.word.split_first() {
                None => ComplexMatrix::identity(n),
                Some((first, rest)) => {
                    let mut m = letter(first).clone();
                    for l in rest {
                        m = m.try_mul(letter(l))?;
                    }
                    m
                }
            };
            acc = acc.try_add(&mono.scale(t.coef))?;
        }
        Ok(acc)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let tokens: Vec<&str> = text
            .split(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .filter(|s| !s.is_empty())
            .collect();
        let mut pos = 0;
        let p = parse_expr(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Parse {
                position: pos,
                reason: alloc::format!("unexpected trailing token {:?}", tokens[pos]),
            });
        }
        Ok(p)
    }
}

fn parse_expr(tokens: &[&str], pos: &mut usize) -> Result<NCPolynomial> {
    let at = *pos;
    let tok = *tokens.get(at).ok_or(Error::Parse {
        position: at,
        reason: String::from("expression ended early"),
    })?;
    *pos += 1;
    match tok {
        "+" | "-" | "*" => {
            let lhs = parse_expr(tokens, pos)?;
            let rhs = parse_expr(tokens, pos)?;
            Ok(match tok {
                "+" => lhs.add(&rhs),
                "-" => lhs.add(&rhs.scale(c64::new(-1.0, 0.0))),
                _ => lhs.mul(&rhs),
            })
        }
        _ => parse_atom(tok).ok_or_else(|| Error::Parse {
            position: at,
            reason: alloc::format!("unrecognized token {tok:?}"),
        }),
    }
}

fn parse_atom(tok: &str) -> Option<NCPolynomial> {
    if let Some(rest) = tok.strip_prefix('x') {
        let (digits, adjoint) = match rest.strip_suffix('*') {
            Some(d) => (d, true),
            None => (rest, false),
        };
        let idx: usize = digits.parse().ok()?;
        if idx == 0 {
            return None;
        }
        return Some(NCPolynomial::letter(idx - 1, adjoint));
    }
    if let Some(im) = tok.strip_suffix('i') {
        let v = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            s => s.parse::<f64>().ok()?,
        };
        return v.is_finite().then(|| NCPolynomial::constant(c64::new(0.0, v)));
    }
    let v: f64 = tok.parse().ok()?;
    v.is_finite().then(|| NCPolynomial::constant(c64::new(v, 0.0)))
}

impl fmt::Display for NCPolynomial {
    /// Writes the polynomial back in prefix syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for _ in 1..self.terms.len() {
            f.write_str("+ ")?;
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            let mut factors: Vec<String> = Vec::new();
            let unit = t.coef == c64::new(1.0, 0.0);
            if !unit || t.word.is_empty() {
                factors.push(if t.coef.im == 0.0 {
                    alloc::format!("{:?}", t.coef.re)
                } else if t.coef.re == 0.0 {
                    alloc::format!("{:?}i", t.coef.im)
                } else {
                    alloc::format!("+ {:?} {:?}i", t.coef.re, t.coef.im)
                });
            }
            for l in &t.word {
                factors.push(alloc::format!("x{}{}", l.index + 1, if l.adjoint { "*" } else { "" }));
            }
            for _ in 1..factors.len() {
                f.write_str("* ")?;
            }
            f.write_str(&factors.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::sample_haar_unitary;
    use crate::RngStream;

    #[test]
    fn parses_prefix_expressions() {
        let p = NCPolynomial::parse("+ * x1 x1 * 0.5 x2*").unwrap();
        assert_eq!(p.terms().len(), 2);
        assert_eq!(p.degree(), 2);
        assert_eq!(p.arity(), 2);
        assert_eq!(p.terms()[1].coef, c64::new(0.5, 0.0));
        assert_eq!(
            p.terms()[1].word,
            alloc::vec![Letter {
                index: 1,
                adjoint: true
            }]
        );
        let q = NCPolynomial::parse("(+ (* 2i x1) -1)").unwrap();
        assert_eq!(q.terms()[0].coef, c64::new(0.0, 2.0));
        assert_eq!(q.terms()[1].coef, c64::new(-1.0, 0.0));
    }

    #[test]
    fn merges_like_terms() {
        let p = NCPolynomial::parse("- + x1 x1 x1").unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].coef, c64::new(1.0, 0.0));
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "+ x1", "x0", "y1", "* x1 x2 x3", "+ 1 nan"] {
            assert!(NCPolynomial::parse(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn display_round_trips() {
        for text in ["x1", "+ * x1 x1 * 0.5 x2*", "+ * 2i x1 -1", "* + 1.5 -0.25i x1"] {
            let p = NCPolynomial::parse(text).unwrap();
            let again = NCPolynomial::parse(&alloc::format!("{p}")).unwrap();
            assert_eq!(p, again, "{text} -> {p}");
        }
    }

    #[test]
    fn evaluates_against_direct_products() {
        let mut rng = RngStream::new(4, 4).generator();
        let u = sample_haar_unitary(6, &mut rng).unwrap();
        let v = sample_haar_unitary(6, &mut rng).unwrap();
        let p = NCPolynomial::parse("+ * x1 x2 * -2 x2* ").unwrap();
        let got = p.evaluate(&[&u, &v]).unwrap();
        let want = &(u.as_matrix() * v.as_matrix()) - &v.adjoint().scale(c64::new(2.0, 0.0));
        assert!(got.two_norm_distance(&want).unwrap() < 1e-14);

        let c = NCPolynomial::constant(c64::new(3.0, 0.0)).evaluate(&[&u]).unwrap();
        assert_eq!(c, ComplexMatrix::identity(6).scale(c64::new(3.0, 0.0)));
        assert!(p.evaluate(&[&u]).is_err());
    }
}
