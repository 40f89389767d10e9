//! Freeness diagnostics for approximate commutants of Haar unitaries.
//!
//! [`word`] and [`poly`] describe what is measured, [`moment`] evaluates
//! centered alternating traces, [`adversary`] builds the commutants `B_j`,
//! [`budget`] holds the closed-form error budgets, and [`experiment`] runs
//! the replicate grid.

pub mod adversary;
pub mod budget;
pub mod experiment;
pub mod moment;
pub mod poly;
pub mod word;

pub use adversary::{
    adversarial_commutant, adversarial_family, restart_search, AdversaryContext, AdversaryStrategy, Carrier,
    Commutant, FamilyDraw, SearchOutcome,
};
pub use budget::{band_freeness_budget, freeness_error_budget, specialized_budget};
pub use experiment::{
    run_freeness_experiment, run_replicate, FreenessParams, MomentRecord, MomentReport, MomentSummary,
    ReplicateFailure, WordTrend,
};
pub use moment::{centered_word_moment, polynomial_word_moment, product_trace, trace_of_product};
pub use poly::{Letter, NCPolynomial, Term};
pub use word::WordSpec;
