//! `concentration`: empirical tails of a Lipschitz statistic against the
//! Herbst bound.

use std::collections::BTreeSet;
use std::path::Path;

use freeness_lab_core::concentration::{tail_report, LipschitzStatistic, TailReport, MIN_TAIL_REPS};
use freeness_lab_core::RngStream;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::format::{f17, read_csv, write_csv, write_tsv};
use crate::run::{run_jobs, Check, ErrorRow, Job, Report, Timings, ERRORS_FILE, ERROR_HEADER};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub n: usize,
    pub statistic: String,
    pub seed: u64,
    pub replicate: u64,
    pub stream_id: u64,
    #[serde(serialize_with = "f17")]
    pub value: f64,
}

pub const SAMPLE_HEADER: &[&str] = &["n", "statistic", "seed", "replicate", "stream_id", "value"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCsvRow {
    pub n: usize,
    pub statistic: String,
    #[serde(serialize_with = "f17")]
    pub lip_constant: f64,
    pub reps: usize,
    #[serde(serialize_with = "f17")]
    pub delta: f64,
    pub exceedances: usize,
    #[serde(serialize_with = "f17")]
    pub freq: f64,
    /// `min(1, herbst_bound)`.
    #[serde(serialize_with = "f17")]
    pub bound: f64,
    #[serde(serialize_with = "f17")]
    pub raw_bound: f64,
    #[serde(serialize_with = "f17")]
    pub ci_radius: f64,
    #[serde(serialize_with = "f17")]
    pub shifted_freq: f64,
    #[serde(serialize_with = "f17")]
    pub shifted_ci_radius: f64,
    pub vacuous: bool,
    pub sound: bool,
    pub sound_shifted: bool,
}

pub const TAIL_HEADER: &[&str] = &[
    "n",
    "statistic",
    "lip_constant",
    "reps",
    "delta",
    "exceedances",
    "freq",
    "bound",
    "raw_bound",
    "ci_radius",
    "shifted_freq",
    "shifted_ci_radius",
    "vacuous",
    "sound",
    "sound_shifted",
];

pub const SAMPLE_FILE: &str = "samples.csv";
pub const TAIL_FILE: &str = "concentration.csv";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConcentrationTables {
    pub samples: Vec<SampleRow>,
    pub errors: Vec<ErrorRow>,
}

fn statistic(name: &str) -> Result<LipschitzStatistic> {
    LipschitzStatistic::by_name(name).map_err(|e| LabError::invalid("stat", e.to_string()))
}

pub fn run(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<(ConcentrationTables, Vec<u64>, Timings)> {
    let stat = statistic(&cfg.stat)?;
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
    let (done, timings) = run_jobs(pool, jobs, |job| stat.sample(job.n, job.stream));
    let mut t = ConcentrationTables::default();
    for (job, r) in done {
        match r {
            Ok(value) => t.samples.push(SampleRow {
                n: job.n,
                statistic: stat.name.clone(),
                seed: cfg.seed,
                replicate: job.replicate,
                stream_id: job.stream.stream_id,
                value,
            }),
            Err(e) => t.errors.push(ErrorRow::new(&job, cfg.seed, e)),
        }
    }
    Ok((t, streams, timings))
}

impl ConcentrationTables {
    /// One tail report per `(statistic, n)` present in the samples.
    pub fn tail_reports(&self, deltas: &[f64]) -> Result<Vec<TailReport>> {
        let cells: BTreeSet<(String, usize)> = self.samples.iter().map(|s| (s.statistic.clone(), s.n)).collect();
        let mut out = Vec::new();
        for (name, n) in cells {
            let stat = statistic(&name)?;
            let values: Vec<f64> = self
                .samples
                .iter()
                .filter(|s| s.n == n && s.statistic == name)
                .map(|s| s.value)
                .collect();
            if values.len() < MIN_TAIL_REPS {
                continue;
            }
            out.push(tail_report(&stat, n, &values, deltas)?);
        }
        Ok(out)
    }

    fn tail_rows(&self, deltas: &[f64]) -> Result<Vec<TailCsvRow>> {
        Ok(self
            .tail_reports(deltas)?
            .iter()
            .flat_map(|rep| {
                rep.rows.iter().map(move |r| TailCsvRow {
                    n: rep.n,
                    statistic: rep.statistic.clone(),
                    lip_constant: rep.lip_constant,
                    reps: rep.reps,
                    delta: r.delta,
                    exceedances: r.exceedances,
                    freq: r.frequency,
                    bound: r.clamped_bound(),
                    raw_bound: r.bound,
                    ci_radius: r.ci_radius,
                    shifted_freq: r.shifted_frequency,
                    shifted_ci_radius: r.shifted_ci_radius,
                    vacuous: r.is_vacuous(),
                    sound: r.is_sound(),
                    sound_shifted: r.is_sound_shifted(),
                })
            })
            .collect())
    }

    pub fn files(&self, cfg: &ExperimentConfig) -> Result<Vec<(String, Vec<u8>)>> {
        let rows = self.tail_rows(&cfg.deltas)?;
        let freq: Vec<(f64, f64)> = rows.iter().map(|r| (r.delta, r.freq)).collect();
        let bound: Vec<(f64, f64)> = rows.iter().map(|r| (r.delta, r.bound)).collect();
        Ok(vec![
            (TAIL_FILE.into(), write_csv(&rows, TAIL_HEADER)?),
            (SAMPLE_FILE.into(), write_csv(&self.samples, SAMPLE_HEADER)?),
            (ERRORS_FILE.into(), write_csv(&self.errors, ERROR_HEADER)?),
            ("plot_tail_frequency.tsv".into(), write_tsv("delta", "freq", &freq)),
            ("plot_tail_bound.tsv".into(), write_tsv("delta", "bound", &bound)),
        ])
    }

    pub fn read(dir: &Path) -> Result<Self> {
        // the tail table is derived, but its schema is still checked
        let _: Vec<TailCsvRow> = read_csv(&dir.join(TAIL_FILE), TAIL_HEADER)?;
        Ok(Self {
            samples: read_csv(&dir.join(SAMPLE_FILE), SAMPLE_HEADER)?,
            errors: read_csv(&dir.join(ERRORS_FILE), ERROR_HEADER)?,
        })
    }

    pub fn merge(&mut self, other: Self) {
        self.samples.extend(other.samples);
        self.errors.extend(other.errors);
        self.samples.sort_by(|a, b| {
            (&a.statistic, a.n, a.seed, a.replicate).cmp(&(&b.statistic, b.n, b.seed, b.replicate))
        });
        self.errors.sort_by_key(|r| (r.n, r.seed, r.replicate));
    }

    pub fn report(&self, cfg: &ExperimentConfig) -> Result<Report> {
        let reports = self.tail_reports(&cfg.deltas)?;
        let rows = self.tail_rows(&cfg.deltas)?;
        let body_reports: Vec<serde_json::Value> = reports
            .iter()
            .map(|r| {
                json!({
                    "n": r.n,
                    "statistic": r.statistic,
                    "lip_constant": r.lip_constant,
                    "reps": r.reps,
                    "mean": r.mean,
                    "std_error": r.std_error,
                    "rows": r.rows.iter().map(|t| json!({
                        "delta": t.delta,
                        "exceedances": t.exceedances,
                        "freq": t.frequency,
                        "bound": t.clamped_bound(),
                        "raw_bound": t.bound,
                        "ci_radius": t.ci_radius,
                        "shifted_freq": t.shifted_frequency,
                        "shifted_ci_radius": t.shifted_ci_radius,
                        "vacuous": t.is_vacuous(),
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        let gated: Vec<&TailCsvRow> = rows.iter().filter(|r| !r.vacuous).collect();
        let unsound = gated.iter().filter(|r| !r.sound).count();
        let shifted = rows.iter().filter(|r| !r.sound_shifted).count();
        let checks = vec![
            Check::new(
                "6",
                "tail frequency within bound plus 99% radius",
                unsound == 0 && !reports.is_empty(),
                format!(
                    "{unsound} of {} non-vacuous rows exceed; {} vacuous rows not gated; {shifted} rows exceed in the mean-shifted worst case",
                    gated.len(),
                    rows.len() - gated.len()
                ),
            ),
            Check::no_failures(&self.errors),
        ];
        Ok(Report {
            body: json!({
                "tails": body_reports,
                "failed_replicates": self.errors.len(),
            }),
            checks,
        })
    }
}
