//! `freeness`: centered word moments of adversarial approximate commutants.

use std::collections::BTreeSet;
use std::path::Path;

use freeness_lab_core::freeness::{run_replicate, MomentRecord, MomentReport, WordSpec};
use freeness_lab_core::{c64, RngStream};
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::format::{f17, f17_opt, read_csv, write_csv, write_tsv};
use crate::run::{run_jobs, Check, ErrorRow, Job, Report, Timings, ERRORS_FILE, ERROR_HEADER};

/// Monte Carlo standard errors allowed on top of the error budget.
pub const BUDGET_SE_MULTIPLIER: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: usize,
    pub seed: u64,
    pub replicate: u64,
    pub stream_id: u64,
    /// Comma-separated 1-based indices.
    pub word: String,
    #[serde(serialize_with = "f17")]
    pub moment_re: f64,
    #[serde(serialize_with = "f17")]
    pub moment_im: f64,
    #[serde(serialize_with = "f17")]
    pub abs_moment: f64,
    pub draws: usize,
    #[serde(serialize_with = "f17")]
    pub max_commutator: f64,
    #[serde(serialize_with = "f17")]
    pub declared_budget: f64,
    #[serde(serialize_with = "f17_opt")]
    pub error_budget: Option<f64>,
    #[serde(serialize_with = "f17")]
    pub crude_bound: f64,
    pub checks_ok: bool,
}

pub const MOMENT_HEADER: &[&str] = &[
    "n",
    "seed",
    "replicate",
    "stream_id",
    "word",
    "moment_re",
    "moment_im",
    "abs_moment",
    "draws",
    "max_commutator",
    "declared_budget",
    "error_budget",
    "crude_bound",
    "checks_ok",
];

pub const MOMENT_FILE: &str = "moments.csv";

impl MomentRow {
    fn from_record(r: &MomentRecord, seed: u64) -> Self {
        Self {
            n: r.n,
            seed,
            replicate: r.replicate,
            stream_id: r.stream_id,
            word: r.word.to_string(),
            moment_re: r.moment.re,
            moment_im: r.moment.im,
            abs_moment: r.abs_moment,
            draws: r.draws,
            max_commutator: r.max_commutator,
            declared_budget: r.declared_budget,
            error_budget: r.error_budget,
            crude_bound: r.crude_bound,
            checks_ok: r.checks_ok,
        }
    }

    fn to_record(&self) -> Result<MomentRecord> {
        Ok(MomentRecord {
            n: self.n,
            replicate: self.replicate,
            stream_id: self.stream_id,
            word: WordSpec::parse(&self.word).map_err(|e| LabError::invalid("word", e.to_string()))?,
            moment: c64::new(self.moment_re, self.moment_im),
            abs_moment: self.abs_moment,
            draws: self.draws,
            max_commutator: self.max_commutator,
            declared_budget: self.declared_budget,
            error_budget: self.error_budget,
            crude_bound: self.crude_bound,
            checks_ok: self.checks_ok,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FreenessTables {
    pub rows: Vec<MomentRow>,
    pub errors: Vec<ErrorRow>,
}

pub fn run(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<(FreenessTables, Vec<u64>, Timings)> {
    let params = cfg.freeness_params();
    let jobs: Vec<Job> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| {
            (0..cfg.reps as u64).map(move |r| Job {
                n,
                cell: 0,
                replicate: r,
                stream: RngStream::cell(cfg.seed, n, r),
            })
        })
        .collect();
    let streams = jobs.iter().map(|j| j.stream.stream_id).collect();
    let (done, timings) = run_jobs(pool, jobs, |job| run_replicate(&params, job.n, job.replicate));
    let mut t = FreenessTables::default();
    for (job, r) in done {
        match r {
            Ok(records) => t.rows.extend(records.iter().map(|r| MomentRow::from_record(r, cfg.seed))),
            Err(e) => t.errors.push(ErrorRow::new(&job, cfg.seed, e)),
        }
    }
    Ok((t, streams, timings))
}

impl FreenessTables {
    pub fn files(&self, cfg: &ExperimentConfig) -> Result<Vec<(String, Vec<u8>)>> {
        let mut files = vec![
            (MOMENT_FILE.into(), write_csv(&self.rows, MOMENT_HEADER)?),
            (ERRORS_FILE.into(), write_csv(&self.errors, ERROR_HEADER)?),
        ];
        let report = self.moment_report(cfg)?;
        for (i, word) in cfg.words.iter().enumerate() {
            let pts: Vec<(f64, f64)> = report
                .summaries
                .iter()
                .filter(|s| &s.word == word && s.replicates > 0)
                .map(|s| (s.n as f64, s.median_abs_moment))
                .collect();
            files.push((
                format!("plot_median_moment_word{}.tsv", i + 1),
                write_tsv("n", "median_abs_moment", &pts),
            ));
        }
        Ok(files)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(Self {
            rows: read_csv(&dir.join(MOMENT_FILE), MOMENT_HEADER)?,
            errors: read_csv(&dir.join(ERRORS_FILE), ERROR_HEADER)?,
        })
    }

    pub fn merge(&mut self, other: Self) {
        self.rows.extend(other.rows);
        self.errors.extend(other.errors);
        self.rows.sort_by(|a, b| (a.n, a.seed, a.replicate).cmp(&(b.n, b.seed, b.replicate)));
        self.errors.sort_by_key(|r| (r.n, r.seed, r.replicate));
    }

    /// Aggregates through the core report, over the dimensions and words
    /// actually present.
    fn moment_report(&self, cfg: &ExperimentConfig) -> Result<MomentReport> {
        let mut params = cfg.freeness_params();
        let ns: BTreeSet<usize> = self.rows.iter().map(|r| r.n).collect();
        if !ns.is_empty() {
            params.n_grid = ns.into_iter().collect();
        }
        let mut words: Vec<WordSpec> = Vec::new();
        for r in &self.rows {
            let w = WordSpec::parse(&r.word).map_err(|e| LabError::invalid("word", e.to_string()))?;
            if !words.contains(&w) {
                words.push(w);
            }
        }
        if !words.is_empty() {
            params.words = words;
        }
        let records = self.rows.iter().map(MomentRow::to_record).collect::<Result<Vec<_>>>()?;
        let mut results: Vec<(usize, u64, freeness_lab_core::Result<Vec<MomentRecord>>)> = Vec::new();
        for rec in records {
            results.push((rec.n, rec.replicate, Ok(vec![rec])));
        }
        Ok(MomentReport::assemble(&params, results))
    }

    pub fn report(&self, cfg: &ExperimentConfig) -> Result<Report> {
        let report = self.moment_report(cfg)?;
        let summaries: Vec<serde_json::Value> = report
            .summaries
            .iter()
            .map(|s| {
                json!({
                    "n": s.n,
                    "word": s.word.to_string(),
                    "replicates": s.replicates,
                    "max_abs_moment": s.max_abs_moment,
                    "median_abs_moment": s.median_abs_moment,
                    "mean_abs_moment": s.mean_abs_moment,
                    "se_abs_moment": s.se_abs_moment,
                    "max_commutator": s.max_commutator,
                    "error_budget": s.error_budget,
                })
            })
            .collect();
        let trends: Vec<serde_json::Value> = report
            .trends
            .iter()
            .map(|t| {
                json!({
                    "word": t.word.to_string(),
                    "decay_slope": t.decay_slope,
                    "medians_nonincreasing": t.medians_nonincreasing,
                })
            })
            .collect();

        let mut checks = Vec::new();
        let n_max = report.params.n_grid.last().copied();
        for word in &report.params.words {
            let Some(s) = n_max.and_then(|n| report.summary(n, word)) else {
                continue;
            };
            if let Some(budget) = s.error_budget {
                let allowed = budget + BUDGET_SE_MULTIPLIER * s.se_abs_moment;
                checks.push(Check::new(
                    "5",
                    &format!("max |moment| within budget at n = {} for word {word}", s.n),
                    s.replicates > 0 && s.max_abs_moment <= allowed,
                    format!(
                        "max {:.4e} vs budget {budget:.6} + {BUDGET_SE_MULTIPLIER}·SE {:.3e}",
                        s.max_abs_moment, s.se_abs_moment
                    ),
                ));
            }
        }
        for t in &report.trends {
            let medians: Vec<String> = report
                .summaries
                .iter()
                .filter(|s| s.word == t.word)
                .map(|s| format!("{:.4e}", s.median_abs_moment))
                .collect();
            checks.push(Check::new(
                "5",
                &format!("median |moment| nonincreasing for word {}", t.word),
                t.medians_nonincreasing,
                format!("medians [{}], log-log slope {:.4}", medians.join(", "), t.decay_slope),
            ));
        }
        let bad = report.records.iter().filter(|r| !r.checks_ok).count();
        checks.push(Check::new(
            "5",
            "commutation budgets and crude bounds",
            bad == 0,
            format!("{bad} of {} records fail", report.records.len()),
        ));
        checks.push(Check::no_failures(&self.errors));
        Ok(Report {
            body: json!({
                "summaries": summaries,
                "trends": trends,
                "failed_replicates": self.errors.len(),
            }),
            checks,
        })
    }
}
