//! Batch driver for the freeness laboratory: configuration files, a
//! deterministic replicate farm, CSV and plot outputs, run manifests and
//! cross-run summaries.
//!
//! ```no_run
//! use freeness_lab::config::{ExperimentConfig, ExperimentKind};
//!
//! let mut cfg = ExperimentConfig::defaults(ExperimentKind::Esd);
//! cfg.n_grid = vec![8];
//! cfg.reps = 100;
//! let outcome = freeness_lab::run::run(&cfg, 1)?;
//! freeness_lab::run::write_run(&outcome, "results/esd".as_ref())?;
//! # Ok::<(), freeness_lab::LabError>(())
//! ```

pub mod config;
pub mod error;
pub mod experiments;
pub mod format;
pub mod run;

pub use config::{load_config, ExperimentConfig, ExperimentKind};
pub use error::{LabError, Result};
pub use run::{run, summarize, write_run, Check, RunManifest, RunOutcome};
