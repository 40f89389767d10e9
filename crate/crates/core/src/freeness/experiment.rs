//! Replicate kernel and aggregation for the freeness experiment.
//!
//! Each `(n, replicate)` cell draws its Haar family from
//! [`RngStream::cell`], builds adversarial commutants, and records the
//! largest `|moment|` per word over the adversary draws. Cells are
//! independent; [`MomentReport::assemble`] sorts them by key so any execution
//! order gives the same report.

use alloc::string::String;
use alloc::vec::Vec;

use super::adversary::{adversarial_family, restart_search, AdversaryContext, AdversaryStrategy, Carrier};
use super::budget::band_freeness_budget;
use super::moment::{crude_polynomial_bound, polynomial_word_moment};
use super::{NCPolynomial, WordSpec};
use crate::haar::sample_haar_family;
use crate::linalg::c64;
use crate::stats::{log_log_slope, max, mean, median, std_error};
use crate::{Error, Result, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct FreenessParams {
    /// Strictly increasing dimensions.
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub words: Vec<WordSpec>,
    /// Polynomial applied to `B_{i_t}` at every word position.
    pub factor: NCPolynomial,
    pub strategy: AdversaryStrategy,
    /// Independent adversary draws per replicate for random carriers.
    /// Deterministic strategies use a single draw; the restart search uses
    /// its own count.
    pub restarts: usize,
}

impl FreenessParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::param("n_grid", "must not be empty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("n_grid", "must be strictly increasing"));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::param("n_grid", "dimensions must be >= 2"));
        }
        if self.reps == 0 {
            return Err(Error::param("reps", "must be >= 1"));
        }
        if self.words.is_empty() {
            return Err(Error::param("words", "need at least one word"));
        }
        if self.restarts == 0 {
            return Err(Error::param("restarts", "must be >= 1"));
        }
        if self.factor.arity() > 1 {
            return Err(Error::param("factor", "must read only the letter x1"));
        }
        self.strategy.validate()
    }

    /// Number of unitaries in the family: enough for every word and for the
    /// carrier polynomial.
    pub fn family_size(&self) -> usize {
        let words = self.words.iter().map(WordSpec::max_index).max().unwrap_or(1);
        let carrier = match &self.strategy {
            AdversaryStrategy::ConjugatedBand {
                carrier: Carrier::Fixed(p),
                ..
            } => p.arity(),
            _ => 0,
        };
        words.max(carrier).max(1)
    }

    /// Adversary draws per replicate.
    pub fn draws(&self) -> usize {
        match &self.strategy {
            AdversaryStrategy::ConjugatedBand {
                carrier: Carrier::RandomWords,
                ..
            } => self.restarts,
            _ => 1,
        }
    }

    /// Uniform error budget for a word of length `k` with operands in the
    /// unit band ball. `None` for exact commutants or `ε ≥ 1`.
    pub fn error_budget(&self, k: usize) -> Option<f64> {
        self.strategy
            .epsilon()
            .and_then(|e| band_freeness_budget(k, e, 1.0).ok())
    }
}

/// One `(n, replicate, word)` observation.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentRecord {
    pub n: usize,
    pub replicate: u64,
    pub stream_id: u64,
    pub word: WordSpec,
    /// Moment of largest modulus over the adversary draws.
    pub moment: c64,
    pub abs_moment: f64,
    pub draws: usize,
    /// Largest `‖[U_j, B_j]‖₂` seen in any draw.
    pub max_commutator: f64,
    /// Largest declared commutation budget in any draw.
    pub declared_budget: f64,
    pub error_budget: Option<f64>,
    pub crude_bound: f64,
    /// Every commutant met its budget and `|moment|` met the crude bound.
    pub checks_ok: bool,
}

/// Runs one replicate at dimension `n`.
pub fn run_replicate(params: &FreenessParams, n: usize, replicate: u64) -> Result<Vec<MomentRecord>> {
    params.validate()?;
    let stream = RngStream::cell(params.seed, n, replicate);
    let mut rng = stream.generator();
    let family = sample_haar_family(n, params.family_size(), &mut rng)?;
    let mut ctx = AdversaryContext::new(family)?;

    let words = &params.words;
    let polys: Vec<Vec<NCPolynomial>> = words
        .iter()
        .map(|w| alloc::vec![params.factor.clone(); w.len()])
        .collect();
    let crude: Vec<f64> = polys.iter().map(|p| crude_polynomial_bound(p)).collect();

    let mut best: Vec<Option<c64>> = alloc::vec![None; words.len()];
    let mut max_commutator = 0.0f64;
    let mut declared = 0.0f64;
    let mut budgets_ok = true;
    let mut draws = 0;

    if let AdversaryStrategy::RandomRestartSearch {
        epsilon,
        restarts,
        steps,
    } = &params.strategy
    {
        for (w, (word, p)) in words.iter().zip(&polys).enumerate() {
            let out = restart_search(&mut ctx, *epsilon, *restarts, *steps, word, p, &mut rng)?;
            max_commutator = max_commutator.max(out.draw.max_commutator());
            declared = declared.max(out.draw.max_budget());
            budgets_ok &= out.draw.all_within_budget();
            best[w] = Some(out.moment);
            draws = draws.max(out.evaluations);
        }
    } else {
        draws = params.draws();
        for _ in 0..draws {
            let draw = adversarial_family(&mut ctx, &params.strategy, &words[0], &polys[0], &mut rng)?;
            max_commutator = max_commutator.max(draw.max_commutator());
            declared = declared.max(draw.max_budget());
            budgets_ok &= draw.all_within_budget();
            let tuples = draw.tuples();
            for (w, (word, p)) in words.iter().zip(&polys).enumerate() {
                let m = polynomial_word_moment(&tuples, word, p)?;
                if best[w].map_or(true, |b| m.norm() > b.norm()) {
                    best[w] = Some(m);
                }
            }
        }
    }

    Ok(words
        .iter()
        .zip(best)
        .zip(crude)
        .map(|((word, m), crude_bound)| {
            let moment = m.expect("at least one draw");
            let abs_moment = moment.norm();
            MomentRecord {
                n,
                replicate,
                stream_id: stream.stream_id,
                word: word.clone(),
                moment,
                abs_moment,
                draws,
                max_commutator,
                declared_budget: declared,
                error_budget: params.error_budget(word.len()),
                crude_bound,
                checks_ok: budgets_ok && abs_moment <= crude_bound,
            }
        })
        .collect())
}

/// Aggregate over replicates for one `(n, word)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSummary {
    pub n: usize,
    pub word: WordSpec,
    pub replicates: usize,
    pub max_abs_moment: f64,
    pub median_abs_moment: f64,
    pub mean_abs_moment: f64,
    pub se_abs_moment: f64,
    pub max_commutator: f64,
    pub error_budget: Option<f64>,
}

/// Behaviour of the medians of one word across the `n` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WordTrend {
    pub word: WordSpec,
    /// Least-squares slope of `log median` against `log n`.
    pub decay_slope: f64,
    pub medians_nonincreasing: bool,
}

/// A replicate that failed numerically; the rest of the run is kept.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateFailure {
    pub n: usize,
    pub replicate: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub params: FreenessParams,
    /// Sorted by `(n, replicate, word position)`.
    pub records: Vec<MomentRecord>,
    pub summaries: Vec<MomentSummary>,
    pub trends: Vec<WordTrend>,
    pub failures: Vec<ReplicateFailure>,
}

impl MomentReport {
    /// Builds the report from per-replicate results in any order.
    pub fn assemble(
        params: &FreenessParams,
        mut results: Vec<(usize, u64, Result<Vec<MomentRecord>>)>,
    ) -> Self {
        results.sort_by_key(|r| (r.0, r.1));
        let mut records = Vec::new();
        let mut failures = Vec::new();
        for (n, replicate, r) in results {
            match r {
                Ok(rs) => records.extend(rs),
                Err(e) => failures.push(ReplicateFailure {
                    n,
                    replicate,
                    reason: alloc::format!("{e}"),
                }),
            }
        }

        let mut summaries = Vec::new();
        for &n in &params.n_grid {
            for word in &params.words {
                let cell: Vec<&MomentRecord> = records.iter().filter(|r| r.n == n && &r.word == word).collect();
                let abs: Vec<f64> = cell.iter().map(|r| r.abs_moment).collect();
                summaries.push(MomentSummary {
                    n,
                    word: word.clone(),
                    replicates: cell.len(),
                    max_abs_moment: max(&abs),
                    median_abs_moment: median(&abs),
                    mean_abs_moment: mean(&abs),
                    se_abs_moment: std_error(&abs),
                    max_commutator: cell.iter().map(|r| r.max_commutator).fold(0.0, f64::max),
                    error_budget: params.error_budget(word.len()),
                });
            }
        }

        let trends = params
            .words
            .iter()
            .map(|word| {
                let rows: Vec<&MomentSummary> = summaries.iter().filter(|s| &s.word == word).collect();
                let ns: Vec<f64> = rows.iter().map(|s| s.n as f64).collect();
                let med: Vec<f64> = rows.iter().map(|s| s.median_abs_moment).collect();
                WordTrend {
                    word: word.clone(),
                    decay_slope: log_log_slope(&ns, &med),
                    medians_nonincreasing: med.windows(2).all(|w| w[1] <= w[0]),
                }
            })
            .collect();

        Self {
            params: params.clone(),
            records,
            summaries,
            trends,
            failures,
        }
    }

    pub fn summary(&self, n: usize, word: &WordSpec) -> Option<&MomentSummary> {
        self.summaries.iter().find(|s| s.n == n && &s.word == word)
    }

    pub fn all_checks_ok(&self) -> bool {
        self.records.iter().all(|r| r.checks_ok)
    }
}

/// Sequential driver over the whole grid.
pub fn run_freeness_experiment(params: &FreenessParams) -> Result<MomentReport> {
    params.validate()?;
    let mut results = Vec::with_capacity(params.n_grid.len() * params.reps);
    for &n in &params.n_grid {
        for rep in 0..params.reps as u64 {
            results.push((n, rep, run_replicate(params, n, rep)));
        }
    }
    Ok(MomentReport::assemble(params, results))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(strategy: AdversaryStrategy) -> FreenessParams {
        FreenessParams {
            n_grid: alloc::vec![16, 32],
            reps: 3,
            seed: 11,
            words: alloc::vec![WordSpec::parse("1,2,1,2").unwrap(), WordSpec::parse("2").unwrap()],
            factor: NCPolynomial::identity_letter(),
            strategy,
            restarts: 2,
        }
    }

    fn band() -> AdversaryStrategy {
        AdversaryStrategy::ConjugatedBand {
            epsilon: 0.25,
            carrier: Carrier::RandomWords,
        }
    }

    #[test]
    fn validation_names_the_field() {
        let mut p = params(band());
        p.n_grid = alloc::vec![32, 16];
        let err = alloc::format!("{}", p.validate().unwrap_err());
        assert!(err.contains("n_grid"), "{err}");
        p.n_grid = alloc::vec![];
        assert!(p.validate().is_err());
        let mut p = params(band());
        p.reps = 0;
        assert!(alloc::format!("{}", p.validate().unwrap_err()).contains("reps"));
    }

    #[test]
    fn report_shape_and_single_letter_zero() {
        let p = params(band());
        let report = run_freeness_experiment(&p).unwrap();
        assert!(report.failures.is_empty());
        assert_eq!(report.records.len(), 2 * 3 * 2);
        assert_eq!(report.summaries.len(), 4);
        assert!(report.all_checks_ok());
        for r in report.records.iter().filter(|r| r.word.len() == 1) {
            assert_eq!(r.moment, c64::new(0.0, 0.0));
        }
        let s = report.summary(32, &p.words[0]).unwrap();
        assert_eq!(s.replicates, 3);
        assert!(s.max_abs_moment >= s.median_abs_moment);
        assert!(s.error_budget.unwrap() > 0.0);
    }

    #[test]
    fn recomputable_from_seed_in_any_order() {
        let p = params(band());
        let report = run_freeness_experiment(&p).unwrap();
        let mut shuffled = Vec::new();
        for &n in p.n_grid.iter().rev() {
            for rep in (0..p.reps as u64).rev() {
                shuffled.push((n, rep, run_replicate(&p, n, rep)));
            }
        }
        // NaN slopes defeat PartialEq; the debug rendering is bit-exact
        let again = MomentReport::assemble(&p, shuffled);
        assert_eq!(alloc::format!("{again:?}"), alloc::format!("{report:?}"));
    }

    #[test]
    fn exact_commutants_have_no_budget() {
        let p = params(AdversaryStrategy::PolynomialInU {
            poly: NCPolynomial::parse("+ x1 * 0.5 * x1 x1").unwrap(),
        });
        let report = run_freeness_experiment(&p).unwrap();
        assert!(report.all_checks_ok());
        assert!(report.records.iter().all(|r| r.error_budget.is_none() && r.draws == 1));
        assert!(report.records.iter().all(|r| r.max_commutator <= 1e-10));
    }

    #[test]
    fn search_strategy_runs() {
        let mut p = params(AdversaryStrategy::RandomRestartSearch {
            epsilon: 0.25,
            restarts: 2,
            steps: 2,
        });
        p.n_grid = alloc::vec![12];
        let report = run_freeness_experiment(&p).unwrap();
        assert!(report.all_checks_ok());
        assert_eq!(report.trends.len(), 2);
        assert!(report.trends[0].decay_slope.is_nan());
    }

    #[test]
    fn failures_become_rows() {
        let p = params(band());
        let results = alloc::vec![
            (16, 0, Err(Error::param("n", "synthetic"))),
            (16, 1, run_replicate(&p, 16, 1)),
        ];
        let report = MomentReport::assemble(&p, results);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].replicate, 0);
        assert_eq!(report.records.len(), 2);
    }
}
