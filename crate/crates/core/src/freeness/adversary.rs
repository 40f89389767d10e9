//! Approximate commutants `B_j` of Haar unitaries with an explicit
//! commutation budget and `‖B_j‖ ≤ 1`.
//!
//! * [`AdversaryStrategy::PolynomialInU`]: `B = p(U_j)/max(1, ‖p(U_j)‖)`,
//!   an exact commutant.
//! * [`AdversaryStrategy::ConjugatedBand`]: with `U_j = W D W*` (phases sorted),
//!   `B = W Y W*/max(1, ‖Y‖)` where `Y` is the band projection of `W* C W`
//!   against the reference diagonal and `C` is a carrier built from the whole
//!   family. Since `[D, Y]_{ab} = (d_a − d_b) Y_{ab}`, the budget is
//!   `g·‖Y‖₂/s` with `g` the largest realized chord `|d_a − d_b|` over the kept
//!   entries, plus the eigendecomposition residual.
//! * [`AdversaryStrategy::RandomRestartSearch`]: random carriers over a word
//!   dictionary followed by gradient-free hill climbing on a target moment.
//!   Candidates that break their budget are discarded.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::moment::polynomial_word_moment;
use super::{NCPolynomial, WordSpec};
use crate::band::{band_project, BlockPartition};
use crate::coupling::ReferenceDiagonal;
use crate::linalg::{c64, commutator, unitary_eigendecomposition, ComplexMatrix, UnitaryEigenSystem, UnitaryMatrix};
use crate::math::sqrt;
use crate::{Error, Result};

/// Step size of the hill-climbing perturbation, relative to the unit-ℓ¹
/// coefficient vector.
pub const SEARCH_STEP: f64 = 0.3;

/// Absolute slack added to declared band budgets for rounding in the
/// basis changes.
pub const BUDGET_ROUNDING_SLACK: f64 = 1e-12;

/// Declared budget of an exact commutant, which only sees rounding.
pub const EXACT_COMMUTANT_TOL: f64 = 1e-10;

/// How the carrier `C` of a conjugated-band commutant is built.
#[derive(Clone, Debug, PartialEq)]
pub enum Carrier {
    /// A fixed polynomial in the family letters `x1 = U_1, x2 = U_2, …`.
    Fixed(NCPolynomial),
    /// Random complex Gaussian combination of the word dictionary, normalized
    /// to unit ℓ¹ coefficient norm. A fresh carrier is drawn per call.
    RandomWords,
}

impl Carrier {
    /// `U_1U_2 + U_2*U_1`.
    pub fn default_fixed() -> Self {
        Carrier::Fixed(NCPolynomial::parse("+ * x1 x2 * x2* x1").expect("valid literal"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AdversaryStrategy {
    PolynomialInU { poly: NCPolynomial },
    ConjugatedBand { epsilon: f64, carrier: Carrier },
    RandomRestartSearch { epsilon: f64, restarts: usize, steps: usize },
}

impl AdversaryStrategy {
    pub fn tag(&self) -> &'static str {
        match self {
            AdversaryStrategy::PolynomialInU { .. } => "polynomial_in_u",
            AdversaryStrategy::ConjugatedBand { .. } => "conjugated_band",
            AdversaryStrategy::RandomRestartSearch { .. } => "random_restart_search",
        }
    }

    /// Band width parameter, absent for exact commutants.
    pub fn epsilon(&self) -> Option<f64> {
        match self {
            AdversaryStrategy::PolynomialInU { .. } => None,
            AdversaryStrategy::ConjugatedBand { epsilon, .. }
            | AdversaryStrategy::RandomRestartSearch { epsilon, .. } => Some(*epsilon),
        }
    }

    /// Whether two calls with different random streams can differ.
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            AdversaryStrategy::ConjugatedBand {
                carrier: Carrier::RandomWords,
                ..
            } | AdversaryStrategy::RandomRestartSearch { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.epsilon() {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::param("epsilon", alloc::format!("must be positive, got {e}")));
            }
        }
        if let AdversaryStrategy::PolynomialInU { poly } = self {
            if poly.arity() > 1 {
                return Err(Error::param("poly", "polynomial_in_u reads the single letter x1"));
            }
        }
        if let AdversaryStrategy::RandomRestartSearch { restarts: 0, .. } = self {
            return Err(Error::param("restarts", "must be >= 1"));
        }
        Ok(())
    }
}

/// An approximate commutant together with its certificate.
#[derive(Clone, Debug)]
pub struct Commutant {
    pub b: ComplexMatrix,
    /// `‖[U_j, B]‖₂`, measured in the original basis.
    pub commutator_two_norm: f64,
    /// Upper bound on `‖[U_j, B]‖₂` promised by the construction.
    pub declared_budget: f64,
    /// `‖B‖` after rescaling.
    pub operator_norm: f64,
}

impl Commutant {
    pub fn within_budget(&self) -> bool {
        self.commutator_two_norm <= self.declared_budget
    }
}

/// A Haar family with lazily computed eigendecompositions and word
/// dictionary, shared by all adversary draws of one replicate.
#[derive(Clone, Debug)]
pub struct AdversaryContext {
    us: Vec<UnitaryMatrix>,
    eig: Vec<Option<UnitaryEigenSystem>>,
    dictionary: Option<Vec<ComplexMatrix>>,
}

impl AdversaryContext {
    pub fn new(us: Vec<UnitaryMatrix>) -> Result<Self> {
        let n = match us.first() {
            Some(u) => u.dim(),
            None => return Err(Error::param("family", "needs at least one unitary")),
        };
        if let Some(bad) = us.iter().find(|u| u.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.dim(),
            });
        }
        let m = us.len();
        Ok(Self {
            us,
            eig: alloc::vec![None; m],
            dictionary: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.us[0].dim()
    }

    pub fn len(&self) -> usize {
        self.us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.us.is_empty()
    }

    pub fn unitaries(&self) -> &[UnitaryMatrix] {
        &self.us
    }

    fn check_index(&self, j: usize) -> Result<usize> {
        if j == 0 || j > self.us.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                n: self.us.len(),
            });
        }
        Ok(j - 1)
    }

    /// Phase-sorted eigendecomposition of `U_j` (1-based), computed once.
    pub fn eigen(&mut self, j: usize) -> Result<&UnitaryEigenSystem> {
        let i = self.check_index(j)?;
        if self.eig[i].is_none() {
            self.eig[i] = Some(unitary_eigendecomposition(&self.us[i])?);
        }
        Ok(self.eig[i].as_ref().expect("just filled"))
    }

    /// Dictionary words: every `U_a`, `U_a*`, and every product of two such
    /// letters except `U_aU_a*` and `U_a*U_a`. Order matches
    /// [`dictionary_labels`].
    pub fn dictionary(&mut self) -> Result<&[ComplexMatrix]> {
        if self.dictionary.is_none() {
            let letters: Vec<ComplexMatrix> = self
                .us
                .iter()
                .flat_map(|u| [u.as_matrix().clone(), u.adjoint().into_matrix()])
                .collect();
            let mut words = letters.clone();
            for (p, x) in letters.iter().enumerate() {
                for (q, y) in letters.iter().enumerate() {
                    if !cancels(p, q) {
                        words.push(x.try_mul(y)?);
                    }
                }
            }
            self.dictionary = Some(words);
        }
        Ok(self.dictionary.as_deref().expect("just filled"))
    }

    /// Combination `Σ c_w w` of dictionary words.
    pub fn carrier_from_coefficients(&mut self, coefs: &[c64]) -> Result<ComplexMatrix> {
        let n = self.dim();
        let dict = self.dictionary()?;
        if coefs.len() != dict.len() {
            return Err(Error::DimensionMismatch {
                expected: dict.len(),
                found: coefs.len(),
            });
        }
        let mut acc = ComplexMatrix::zeros(n);
        for (c, w) in coefs.iter().zip(dict) {
            if *c != c64::new(0.0, 0.0) {
                acc = acc.try_add(&w.scale(*c))?;
            }
        }
        Ok(acc)
    }

    pub fn dictionary_size(&self) -> usize {
        dictionary_size(self.us.len())
    }

    /// `B = p(U_j)/max(1, ‖p(U_j)‖)`.
    pub fn polynomial_commutant(&self, j: usize, poly: &NCPolynomial) -> Result<Commutant> {
        let i = self.check_index(j)?;
        let u = &self.us[i];
        let p = poly.evaluate(&[u.as_matrix()])?;
        let norm = p.operator_norm()?;
        let s = norm.max(1.0);
        let b = p.scale(c64::new(1.0 / s, 0.0));
        let commutator_two_norm = commutator(u, &b)?.two_norm();
        Ok(Commutant {
            b,
            commutator_two_norm,
            declared_budget: EXACT_COMMUTANT_TOL,
            operator_norm: norm / s,
        })
    }

    /// Band-projected commutant of `U_j` built from `carrier`.
    pub fn band_commutant(&mut self, j: usize, epsilon: f64, carrier: &ComplexMatrix) -> Result<Commutant> {
        let i = self.check_index(j)?;
        let n = self.dim();
        if carrier.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: carrier.dim(),
            });
        }
        self.eigen(j)?;
        let sys = self.eig[i].as_ref().expect("computed above");
        let w = sys.eigenvectors();
        let d = sys.eigenvalues();
        let y = band_project(&w.conjugate_inverse(carrier)?, epsilon, &ReferenceDiagonal::new(n))?;

        let gap = max_kept_chord(&d, n, epsilon)?;
        let y_op = y.operator_norm()?;
        let s = y_op.max(1.0);
        let b = w.conjugate(&y)?.scale(c64::new(1.0 / s, 0.0));
        let declared_budget = gap * y.two_norm() / s
            + 2.0 * sys.residual()
            + 4.0 * w.defect() * y_op / s
            + BUDGET_ROUNDING_SLACK;
        let commutator_two_norm = commutator(&self.us[i], &b)?.two_norm();
        Ok(Commutant {
            b,
            commutator_two_norm,
            declared_budget,
            operator_norm: y_op / s,
        })
    }

    /// Fresh unit-ℓ¹ complex Gaussian coefficients over the dictionary.
    pub fn random_coefficients<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<c64> {
        let mut c: Vec<c64> = (0..self.dictionary_size())
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c64::new(re, im)
            })
            .collect();
        normalize_l1(&mut c);
        c
    }
}

fn cancels(p: usize, q: usize) -> bool {
    // letters 2a, 2a+1 are U_a, U_a*
    p / 2 == q / 2 && p != q
}

/// Dictionary size for a family of `m` unitaries: `2m + (2m)² − 2m`.
pub fn dictionary_size(m: usize) -> usize {
    4 * m * m
}

/// Human-readable names of the dictionary words, e.g. `U1`, `U2*U1`.
pub fn dictionary_labels(m: usize) -> Vec<String> {
    let letters: Vec<String> = (1..=m)
        .flat_map(|a| [alloc::format!("U{a}"), alloc::format!("U{a}*")])
        .collect();
    let mut out = letters.clone();
    for (p, x) in letters.iter().enumerate() {
        for (q, y) in letters.iter().enumerate() {
            if !cancels(p, q) {
                out.push(alloc::format!("{x}{y}"));
            }
        }
    }
    out
}

fn normalize_l1(c: &mut [c64]) {
    let l1: f64 = c.iter().map(|z| z.norm()).sum();
    if l1 > 0.0 {
        for z in c.iter_mut() {
            *z /= l1;
        }
    }
}

/// Largest `|d_a − d_b|` over the entries that survive the band projection.
fn max_kept_chord(d: &[c64], n: usize, epsilon: f64) -> Result<f64> {
    let partition = BlockPartition::new(n, epsilon)?;
    let Some(p) = partition else {
        return Ok(0.0);
    };
    let mut g = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            if p.adjacent(p.block_of(a), p.block_of(b)) {
                g = g.max((d[a] - d[b]).norm());
            }
        }
    }
    Ok(g)
}

/// One adversary draw for the whole family.
#[derive(Clone, Debug)]
pub struct FamilyDraw {
    pub commutants: Vec<Commutant>,
}

impl FamilyDraw {
    /// `(B_j)` as one-element tuples, ready for
    /// [`polynomial_word_moment`].
    pub fn tuples(&self) -> Vec<Vec<ComplexMatrix>> {
        self.commutants.iter().map(|c| alloc::vec![c.b.clone()]).collect()
    }

    pub fn max_commutator(&self) -> f64 {
        self.commutants.iter().map(|c| c.commutator_two_norm).fold(0.0, f64::max)
    }

    pub fn max_budget(&self) -> f64 {
        self.commutants.iter().map(|c| c.declared_budget).fold(0.0, f64::max)
    }

    pub fn all_within_budget(&self) -> bool {
        self.commutants.iter().all(Commutant::within_budget)
    }
}

fn band_family(ctx: &mut AdversaryContext, epsilon: f64, carriers: &[ComplexMatrix]) -> Result<FamilyDraw> {
    let commutants = carriers
        .iter()
        .enumerate()
        .map(|(i, c)| ctx.band_commutant(i + 1, epsilon, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyDraw { commutants })
}

/// Result of a restart search: the best family found and its target moment.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub draw: FamilyDraw,
    pub moment: c64,
    /// Candidates evaluated.
    pub evaluations: usize,
    /// Candidates discarded for exceeding their budget.
    pub rejected: usize,
}

/// Maximizes `|polynomial_word_moment|` over band commutants built from
/// random dictionary carriers, one carrier per family member. Each restart
/// draws fresh coefficients and then takes `steps` perturbation steps,
/// accepting strict improvements.
pub fn restart_search<R: Rng + ?Sized>(
    ctx: &mut AdversaryContext,
    epsilon: f64,
    restarts: usize,
    steps: usize,
    word: &WordSpec,
    polys: &[NCPolynomial],
    rng: &mut R,
) -> Result<SearchOutcome> {
    let m = ctx.len();
    let mut best: Option<(FamilyDraw, c64)> = None;
    let (mut evaluations, mut rejected) = (0, 0);
    let mut evaluate = |ctx: &mut AdversaryContext, coefs: &[Vec<c64>]| -> Result<Option<(FamilyDraw, c64)>> {
        let carriers = coefs
            .iter()
            .map(|c| ctx.carrier_from_coefficients(c))
            .collect::<Result<Vec<_>>>()?;
        let draw = band_family(ctx, epsilon, &carriers)?;
        evaluations += 1;
        if !draw.all_within_budget() {
            rejected += 1;
            return Ok(None);
        }
        let moment = polynomial_word_moment(&draw.tuples(), word, polys)?;
        Ok(Some((draw, moment)))
    };

    for _ in 0..restarts.max(1) {
        let mut coefs: Vec<Vec<c64>> = (0..m).map(|_| ctx.random_coefficients(rng)).collect();
        let mut current = evaluate(ctx, &coefs)?;
        for _ in 0..steps {
            let trial: Vec<Vec<c64>> = coefs
                .iter()
                .map(|c| {
                    let mut t: Vec<c64> = c
                        .iter()
                        .map(|z| {
                            let re: f64 = rng.sample(StandardNormal);
                            let im: f64 = rng.sample(StandardNormal);
                            z + c64::new(re, im) * (SEARCH_STEP / sqrt(c.len() as f64))
                        })
                        .collect();
                    normalize_l1(&mut t);
                    t
                })
                .collect();
            if let Some(cand) = evaluate(ctx, &trial)? {
                let better = match &current {
                    Some((_, v)) => cand.1.norm() > v.norm(),
                    None => true,
                };
                if better {
                    current = Some(cand);
                    coefs = trial;
                }
            }
        }
        if let Some(cand) = current {
            if best.as_ref().map_or(true, |(_, v)| cand.1.norm() > v.norm()) {
                best = Some(cand);
            }
        }
    }
    let (draw, moment) = best.ok_or(Error::Numerical {
        what: "restart search (every candidate exceeded its budget)",
        residual: rejected as f64,
    })?;
    Ok(SearchOutcome {
        draw,
        moment,
        evaluations,
        rejected,
    })
}

/// Draws commutants for every member of the family. For the restart search
/// the target is `word` with factors `polys`.
pub fn adversarial_family<R: Rng + ?Sized>(
    ctx: &mut AdversaryContext,
    strategy: &AdversaryStrategy,
    word: &WordSpec,
    polys: &[NCPolynomial],
    rng: &mut R,
) -> Result<FamilyDraw> {
    strategy.validate()?;
    let m = ctx.len();
    match strategy {
        AdversaryStrategy::PolynomialInU { poly } => {
            let commutants = (1..=m)
                .map(|j| ctx.polynomial_commutant(j, poly))
                .collect::<Result<Vec<_>>>()?;
            Ok(FamilyDraw { commutants })
        }
        AdversaryStrategy::ConjugatedBand { epsilon, carrier } => {
            let carriers = match carrier {
                Carrier::Fixed(p) => {
                    let c = {
                        let tuple: Vec<&ComplexMatrix> = ctx.us.iter().map(|u| u.as_matrix()).collect();
                        p.evaluate(&tuple)?
                    };
                    alloc::vec![c; m]
                }
                Carrier::RandomWords => (0..m)
                    .map(|_| {
                        let c = ctx.random_coefficients(rng);
                        ctx.carrier_from_coefficients(&c)
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            band_family(ctx, *epsilon, &carriers)
        }
        AdversaryStrategy::RandomRestartSearch {
            epsilon,
            restarts,
            steps,
        } => Ok(restart_search(ctx, *epsilon, *restarts, *steps, word, polys, rng)?.draw),
    }
}

/// Commutant of `U_j` (1-based). The restart search targets the word
/// `(j, j', j, j')` with `j'` the next family index, or `(j)` for a family of
/// one.
pub fn adversarial_commutant<R: Rng + ?Sized>(
    ctx: &mut AdversaryContext,
    j: usize,
    strategy: &AdversaryStrategy,
    rng: &mut R,
) -> Result<Commutant> {
    ctx.check_index(j)?;
    strategy.validate()?;
    match strategy {
        AdversaryStrategy::PolynomialInU { poly } => ctx.polynomial_commutant(j, poly),
        AdversaryStrategy::ConjugatedBand { epsilon, carrier } => {
            let c = match carrier {
                Carrier::Fixed(p) => {
                    let tuple: Vec<&ComplexMatrix> = ctx.us.iter().map(|u| u.as_matrix()).collect();
                    p.evaluate(&tuple)?
                }
                Carrier::RandomWords => {
                    let coefs = ctx.random_coefficients(rng);
                    ctx.carrier_from_coefficients(&coefs)?
                }
            };
            ctx.band_commutant(j, *epsilon, &c)
        }
        AdversaryStrategy::RandomRestartSearch { .. } => {
            let m = ctx.len();
            let word = if m == 1 {
                WordSpec::new(alloc::vec![1])?
            } else {
                let other = j % m + 1;
                WordSpec::new(alloc::vec![j, other, j, other])?
            };
            let polys = alloc::vec![NCPolynomial::identity_letter(); word.len()];
            let mut draw = adversarial_family(ctx, strategy, &word, &polys, rng)?;
            Ok(draw.commutants.swap_remove(j - 1))
        }
    }
}
