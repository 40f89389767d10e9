//! Herbst-type tail bounds for Lipschitz statistics of independent Haar
//! unitaries, and their empirical counterparts.
//!
//! For `f` Lipschitz with constant `L` in the product metric
//! `Σ_j ‖U_j − V_j‖₂`, `P(|f − E f| ≥ δ) ≤ 4·exp(−n²δ²/(12L²))`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::coupling::reference_diagonal;
use crate::freeness::{centered_word_moment, trace_of_product, WordSpec};
use crate::haar::sample_haar_family;
use crate::linalg::{ComplexMatrix, UnitaryMatrix};
use crate::math::exp;
use crate::stats::{mean, std_error, wilson_upper_radius, Z_99};
use crate::{Error, Result, RngStream};

/// Smallest replicate count accepted by the tail experiment.
pub const MIN_TAIL_REPS: usize = 1000;

/// `4·exp(−n²δ²/(12L²))`. Every argument must be positive.
pub fn herbst_bound(n: usize, delta: f64, lip: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::param("delta", alloc::format!("must be positive, got {delta}")));
    }
    if !(lip.is_finite() && lip > 0.0) {
        return Err(Error::param("lip", alloc::format!("must be positive, got {lip}")));
    }
    let n = n as f64;
    Ok(4.0 * exp(-(n * n * delta * delta) / (12.0 * lip * lip)))
}

/// Reportable bound: `min(1, herbst_bound)`, and `0` for a constant
/// statistic (`lip = 0`).
pub fn clamped_bound(n: usize, delta: f64, lip: f64) -> Result<f64> {
    if lip == 0.0 {
        if !(delta > 0.0) {
            return Err(Error::param("delta", "must be positive"));
        }
        return Ok(0.0);
    }
    Ok(herbst_bound(n, delta, lip)?.min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatisticKind {
    /// `Re tr_n(U_1)`.
    TraceReal,
    /// `Re tr_n(U_1 U_2)`.
    ProductTraceReal,
    /// `Re tr_n[Π_t U_{i_t}(X_t − tr X_t)U_{i_t}*]` on the alternating word
    /// `1,2,1,…` of length `k`, with frozen `X_t = A^t`.
    CenteredWord { k: usize },
    /// The constant `0`.
    Zero,
}

/// A real statistic of a tuple of unitaries with a certified Lipschitz
/// constant for the metric `Σ_j ‖U_j − V_j‖₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzStatistic {
    pub kind: StatisticKind,
    pub lip_constant: f64,
    pub name: String,
    pub description: &'static str,
}

impl LipschitzStatistic {
    /// `|tr_n M| ≤ ‖M‖₂`, so `L = 1`.
    pub fn trace_real() -> Self {
        Self {
            kind: StatisticKind::TraceReal,
            lip_constant: 1.0,
            name: String::from("trace"),
            description: "Re tr_n(U1)",
        }
    }

    /// `U₁U₂ − V₁V₂ = (U₁−V₁)U₂ + V₁(U₂−V₂)`, so `L = 2` suffices.
    pub fn product_trace_real() -> Self {
        Self {
            kind: StatisticKind::ProductTraceReal,
            lip_constant: 2.0,
            name: String::from("product_trace"),
            description: "Re tr_n(U1 U2)",
        }
    }

    /// Each factor `U X° U*` moves by at most `2‖U − V‖₂` when `‖X°‖ ≤ 1`,
    /// and there are `k` factors, so `L = 2k`.
    pub fn centered_word(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k", "word length must be >= 1"));
        }
        Ok(Self {
            kind: StatisticKind::CenteredWord { k },
            lip_constant: 2.0 * k as f64,
            name: alloc::format!("centered_word{k}"),
            description: "Re tr_n of the centered alternating word with X_t = A^t",
        })
    }

    pub fn zero() -> Self {
        Self {
            kind: StatisticKind::Zero,
            lip_constant: 0.0,
            name: String::from("zero"),
            description: "constant 0",
        }
    }

    /// Looks up `trace`, `product_trace`, `zero` or `centered_word<k>`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "trace" => Ok(Self::trace_real()),
            "product_trace" => Ok(Self::product_trace_real()),
            "zero" => Ok(Self::zero()),
            other => match other.strip_prefix("centered_word").map(str::parse::<usize>) {
                Some(Ok(k)) => Self::centered_word(k),
                _ => Err(Error::param(
                    "stat",
                    alloc::format!("unknown statistic {other:?} (trace, product_trace, centered_word<k>, zero)"),
                )),
            },
        }
    }

    /// Number of unitaries the statistic reads.
    pub fn arity(&self) -> usize {
        match self.kind {
            StatisticKind::TraceReal | StatisticKind::Zero => 1,
            StatisticKind::ProductTraceReal => 2,
            StatisticKind::CenteredWord { k } => k.min(2),
        }
    }

    pub fn evaluate(&self, us: &[UnitaryMatrix]) -> Result<f64> {
        if us.len() < self.arity() {
            return Err(Error::DimensionMismatch {
                expected: self.arity(),
                found: us.len(),
            });
        }
        match self.kind {
            StatisticKind::TraceReal => Ok(us[0].normalized_trace().re),
            StatisticKind::ProductTraceReal => Ok(trace_of_product(&us[0], &us[1])?.re),
            StatisticKind::CenteredWord { k } => {
                let n = us[0].dim();
                let word = WordSpec::new((0..k).map(|t| t % 2 + 1).collect())?;
                let a = reference_diagonal(n);
                let mut x: Vec<ComplexMatrix> = Vec::with_capacity(k);
                let mut power = a.clone();
                for _ in 0..k {
                    x.push(power.clone());
                    power = power.try_mul(&a)?;
                }
                Ok(centered_word_moment(&us[..self.arity()], &x, &word)?.re)
            }
            StatisticKind::Zero => Ok(0.0),
        }
    }

    /// Value on a fresh Haar tuple drawn from `stream`.
    pub fn sample(&self, n: usize, stream: RngStream) -> Result<f64> {
        let us = sample_haar_family(n, self.arity(), &mut stream.generator())?;
        self.evaluate(&us)
    }

    /// `|f(U) − f(V)| / (L·Σ_j ‖U_j − V_j‖₂)`; `None` when the denominator
    /// vanishes.
    pub fn lipschitz_ratio(&self, us: &[UnitaryMatrix], vs: &[UnitaryMatrix]) -> Result<Option<f64>> {
        let num = (self.evaluate(us)? - self.evaluate(vs)?).abs();
        let mut dist = 0.0;
        for (u, v) in us.iter().zip(vs).take(self.arity()) {
            dist += u.two_norm_distance(v)?;
        }
        let den = self.lip_constant * dist;
        Ok((den > 0.0).then(|| num / den))
    }
}

/// Default registry: trace, product trace, the centered word of length 4,
/// and the constant statistic.
pub fn statistic_registry() -> Vec<LipschitzStatistic> {
    alloc::vec![
        LipschitzStatistic::trace_real(),
        LipschitzStatistic::product_trace_real(),
        LipschitzStatistic::centered_word(4).expect("k > 0"),
        LipschitzStatistic::zero(),
    ]
}

/// Tail statistics at one `δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailRow {
    pub delta: f64,
    pub exceedances: usize,
    /// Fraction of replicates with `|f − mean| ≥ δ`.
    pub frequency: f64,
    /// Unclamped `4·exp(−n²δ²/(12L²))`, or 0 for a constant statistic.
    pub bound: f64,
    /// 99% Wilson upper radius of `frequency`.
    pub ci_radius: f64,
    /// Frequency at the threshold `δ − Z₉₉·SE`, covering the error of
    /// centering at the sample mean.
    pub shifted_frequency: f64,
    pub shifted_ci_radius: f64,
}

impl TailRow {
    pub fn clamped_bound(&self) -> f64 {
        self.bound.min(1.0)
    }

    /// `bound ≥ 1`: reported but not gated.
    pub fn is_vacuous(&self) -> bool {
        self.bound >= 1.0
    }

    /// `frequency ≤ min(1, bound) + ci_radius`.
    pub fn is_sound(&self) -> bool {
        self.frequency <= self.clamped_bound() + self.ci_radius
    }

    /// Soundness of the mean-shifted worst case.
    pub fn is_sound_shifted(&self) -> bool {
        self.shifted_frequency <= self.clamped_bound() + self.shifted_ci_radius
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub n: usize,
    pub reps: usize,
    pub statistic: String,
    pub lip_constant: f64,
    pub mean: f64,
    pub std_error: f64,
    pub rows: Vec<TailRow>,
}

impl TailReport {
    pub fn all_sound(&self) -> bool {
        self.rows.iter().all(TailRow::is_sound)
    }
}

/// Builds the report from sampled values (in replicate order).
pub fn tail_report(stat: &LipschitzStatistic, n: usize, values: &[f64], deltas: &[f64]) -> Result<TailReport> {
    if values.len() < MIN_TAIL_REPS {
        return Err(Error::param(
            "reps",
            alloc::format!("need at least {MIN_TAIL_REPS} replicates, got {}", values.len()),
        ));
    }
    if deltas.is_empty() {
        return Err(Error::param("deltas", "need at least one delta"));
    }
    let reps = values.len();
    let m = mean(values);
    let se = if stat.kind == StatisticKind::Zero { 0.0 } else { std_error(values) };
    let count = |threshold: f64| values.iter().filter(|v| (*v - m).abs() >= threshold).count();
    let rows = deltas
        .iter()
        .map(|&delta| {
            let bound = if stat.lip_constant == 0.0 {
                clamped_bound(n, delta, 0.0)?
            } else {
                herbst_bound(n, delta, stat.lip_constant)?
            };
            let hits = count(delta);
            let shifted_hits = count((delta - Z_99 * se).max(0.0)).max(hits);
            Ok(TailRow {
                delta,
                exceedances: hits,
                frequency: hits as f64 / reps as f64,
                bound,
                ci_radius: wilson_upper_radius(hits, reps, Z_99),
                shifted_frequency: shifted_hits as f64 / reps as f64,
                shifted_ci_radius: wilson_upper_radius(shifted_hits, reps, Z_99),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TailReport {
        n,
        reps,
        statistic: stat.name.clone(),
        lip_constant: stat.lip_constant,
        mean: m,
        std_error: se,
        rows,
    })
}

/// Sequential tail experiment; replicate `r` uses `RngStream::cell(seed, n, r)`.
pub fn empirical_tail(
    stat: &LipschitzStatistic,
    n: usize,
    reps: usize,
    deltas: &[f64],
    seed: u64,
) -> Result<TailReport> {
    if reps < MIN_TAIL_REPS {
        return Err(Error::param("reps", alloc::format!("need at least {MIN_TAIL_REPS}")));
    }
    let values = (0..reps as u64)
        .map(|r| stat.sample(n, RngStream::cell(seed, n, r)))
        .collect::<Result<Vec<_>>>()?;
    tail_report(stat, n, &values, deltas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{sample_ginibre, sample_haar_unitary};
    use crate::linalg::{c64, orthonormalize_columns};
    use crate::math::ln;
    use approx::assert_relative_eq;

    #[test]
    fn herbst_reference_values() {
        // 4·exp(−100/12)
        assert_relative_eq!(herbst_bound(200, 0.05, 1.0).unwrap(), 9.614_779_056_780_563e-4, max_relative = 1e-9);
        // n = 16, δ = 0.02 is vacuous
        let b = herbst_bound(16, 0.02, 1.0).unwrap();
        assert_relative_eq!(b, 4.0 * (-0.1024f64 / 12.0).exp(), max_relative = 1e-14);
        assert!(b > 3.9);
        assert_eq!(clamped_bound(16, 0.02, 1.0).unwrap(), 1.0);
        assert!(herbst_bound(0, 0.1, 1.0).is_err());
        assert!(herbst_bound(4, 0.0, 1.0).is_err());
        assert!(herbst_bound(4, 0.1, -1.0).is_err());
        assert_eq!(clamped_bound(4, 0.1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn herbst_exponent_scales_with_n_squared() {
        // ln(bound/4) = −n²δ²/(12L²): doubling n multiplies it by 4
        for n in [50, 100, 200, 256] {
            let r = ln(herbst_bound(2 * n, 0.05, 1.0).unwrap() / 4.0) / ln(herbst_bound(n, 0.05, 1.0).unwrap() / 4.0);
            assert_relative_eq!(r, 4.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn doubling_lipschitz_quadruples_delta_squared() {
        for &(n, d) in &[(16, 0.1), (200, 0.05), (512, 0.01)] {
            let a = herbst_bound(n, d, 1.0).unwrap();
            let b = herbst_bound(n, 2.0 * d, 2.0).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn registry_constants() {
        let reg = statistic_registry();
        assert_eq!(reg.len(), 4);
        assert_eq!(reg[0].lip_constant, 1.0);
        assert_eq!(reg[1].lip_constant, 2.0);
        assert_eq!(LipschitzStatistic::centered_word(1).unwrap().lip_constant, 2.0);
        assert_eq!(reg[2].lip_constant, 8.0);
        for s in &reg {
            assert_eq!(&LipschitzStatistic::by_name(&s.name).unwrap(), s);
        }
        assert!(LipschitzStatistic::by_name("nope").is_err());
        assert!(LipschitzStatistic::by_name("centered_word0").is_err());
    }

    fn near(u: &UnitaryMatrix, t: f64, seed: u64) -> UnitaryMatrix {
        let n = u.dim();
        let g = sample_ginibre(n, &mut RngStream::new(seed, 9).generator());
        let m = ComplexMatrix::identity(n).try_add(&g.scale(c64::new(t, 0.0))).unwrap();
        let p = UnitaryMatrix::new(orthonormalize_columns(&m.as_faer().to_owned())).unwrap();
        u.compose(&p).unwrap()
    }

    #[test]
    fn lipschitz_spot_checks() {
        let n = 24;
        for seed in 0..20 {
            let mut rng = RngStream::new(seed, 0).generator();
            let us: Vec<UnitaryMatrix> = (0..2).map(|_| sample_haar_unitary(n, &mut rng).unwrap()).collect();
            for t in [1e-3, 0.05, 0.5] {
                let vs: Vec<UnitaryMatrix> = us.iter().enumerate().map(|(j, u)| near(u, t, seed * 7 + j as u64)).collect();
                for stat in statistic_registry().iter().filter(|s| s.lip_constant > 0.0) {
                    let r = stat.lipschitz_ratio(&us, &vs).unwrap().unwrap();
                    assert!(r <= 1.0, "{} ratio {r}", stat.name);
                }
            }
        }
    }

    #[test]
    fn zero_statistic_never_exceeds() {
        let rep = empirical_tail(&LipschitzStatistic::zero(), 8, 1000, &[0.01, 0.5], 1).unwrap();
        assert!(rep.rows.iter().all(|r| r.exceedances == 0 && r.bound == 0.0));
        assert!(rep.all_sound());
    }

    #[test]
    fn small_n_tail_is_sound_and_recorded() {
        let stat = LipschitzStatistic::trace_real();
        let rep = empirical_tail(&stat, 16, 1000, &[0.02, 0.3], 3).unwrap();
        assert!(rep.rows[0].is_vacuous());
        assert!(rep.rows[0].frequency > 0.5);
        assert!(rep.all_sound());
        assert!(rep.rows.iter().all(|r| r.is_sound_shifted()));
        for r in &rep.rows {
            assert!((0.0..=1.0).contains(&r.frequency));
            assert!(r.shifted_frequency >= r.frequency);
        }
        assert!(empirical_tail(&stat, 16, 999, &[0.1], 3).is_err());
        assert!(empirical_tail(&stat, 16, 1000, &[], 3).is_err());
        assert!(empirical_tail(&stat, 16, 1000, &[-0.1], 3).is_err());
    }

    #[test]
    fn word_statistic_matches_direct_product() {
        let n = 10;
        let us: Vec<UnitaryMatrix> = {
            let mut rng = RngStream::new(4, 0).generator();
            (0..2).map(|_| sample_haar_unitary(n, &mut rng).unwrap()).collect()
        };
        let a = reference_diagonal(n);
        let a2 = a.try_mul(&a).unwrap();
        let f = LipschitzStatistic::centered_word(2).unwrap().evaluate(&us).unwrap();
        let p = us[0].conjugate(&a).unwrap().try_mul(&us[1].conjugate(&a2).unwrap()).unwrap();
        assert!((f - p.normalized_trace().re).abs() < 1e-13);
        assert_eq!(LipschitzStatistic::centered_word(1).unwrap().evaluate(&us).unwrap(), 0.0);
    }
}
