//! Replicate farm, gate checks and the run directory layout.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use freeness_lab_core::RngStream;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{LabError, Result};
use crate::experiments;

/// Environment variable consulted when no thread count is given.
pub const THREADS_ENV: &str = "FREENESS_LAB_THREADS";

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One replicate job. `cell` separates parameter cells that share `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Job {
    pub n: usize,
    pub cell: u64,
    pub replicate: u64,
    pub stream: RngStream,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    /// Summed job time per dimension, keyed by `n`.
    pub per_n_seconds: BTreeMap<usize, f64>,
}

/// Thread count from the flag, then [`THREADS_ENV`], then rayon's default.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| LabError::invalid("threads", format!("{THREADS_ENV}={v:?} is not an integer"))),
        Err(_) => Ok(0),
    }
}

/// `threads == 0` lets rayon pick.
pub fn build_pool(threads: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Pool(e.to_string()))
}

/// Runs every job on the pool and returns the results sorted by job key,
/// so the output never depends on scheduling.
pub fn run_jobs<T, F>(pool: &ThreadPool, jobs: Vec<Job>, f: F) -> (Vec<(Job, T)>, Timings)
where
    T: Send,
    F: Fn(&Job) -> T + Sync + Send,
{
    let start = Instant::now();
    let mut done: Vec<(Job, T, f64)> = pool.install(|| {
        jobs.into_par_iter()
            .map(|j| {
                let t = Instant::now();
                let r = f(&j);
                (j, r, t.elapsed().as_secs_f64())
            })
            .collect()
    });
    done.sort_by(|a, b| a.0.cmp(&b.0));
    let mut timings = Timings {
        total_seconds: start.elapsed().as_secs_f64(),
        ..Timings::default()
    };
    for (j, _, secs) in &done {
        *timings.per_n_seconds.entry(j.n).or_default() += secs;
    }
    (done.into_iter().map(|(j, r, _)| (j, r)).collect(), timings)
}

/// A replicate that failed; its other rows are absent, everything else is
/// kept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub n: usize,
    pub seed: u64,
    pub replicate: u64,
    pub stream_id: u64,
    pub error: String,
}

pub const ERROR_HEADER: &[&str] = &["n", "seed", "replicate", "stream_id", "error"];
pub const ERRORS_FILE: &str = "errors.csv";

impl ErrorRow {
    pub fn new(job: &Job, seed: u64, e: impl std::fmt::Display) -> Self {
        Self {
            n: job.n,
            seed,
            replicate: job.replicate,
            stream_id: job.stream.stream_id,
            error: e.to_string(),
        }
    }
}

/// One pass/fail line of a gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Acceptance criterion id, or `run` for run health.
    pub criterion: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(criterion: &str, name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            criterion: criterion.into(),
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn no_failures(errors: &[ErrorRow]) -> Self {
        Check::new(
            "run",
            "replicate failures",
            errors.is_empty(),
            format!("{} failed replicates", errors.len()),
        )
    }
}

/// Per-criterion verdicts: a criterion passes when all its checks pass.
pub fn criteria(checks: &[Check]) -> BTreeMap<String, bool> {
    let mut out = BTreeMap::new();
    for c in checks {
        *out.entry(c.criterion.clone()).or_insert(true) &= c.passed;
    }
    out
}

/// Aggregated statistics plus gate checks.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub body: serde_json::Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The summary document: the body with `checks` and `criteria` added.
    pub fn document(&self, kind: ExperimentKind, config_hashes: &[String]) -> serde_json::Value {
        let mut doc = serde_json::json!({
            "kind": kind.name(),
            "config_hashes": config_hashes,
        });
        let obj = doc.as_object_mut().expect("object literal");
        if let serde_json::Value::Object(body) = &self.body {
            for (k, v) in body {
                obj.insert(k.clone(), v.clone());
            }
        }
        obj.insert("checks".into(), serde_json::to_value(&self.checks).expect("plain data"));
        obj.insert("criteria".into(), serde_json::to_value(criteria(&self.checks)).expect("plain data"));
        doc
    }
}

/// Everything a run produces before it is written out.
#[derive(Debug)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    /// Result files in write order, by file name.
    pub files: Vec<(String, Vec<u8>)>,
    pub report: Report,
    pub stream_ids: Vec<u64>,
    pub timings: Timings,
    pub threads: usize,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|f| f.0 == name).map(|f| f.1.as_slice())
    }
}

pub const CONFIG_FILE: &str = "config.txt";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub stream_ids: Vec<u64>,
    pub timings: Timings,
    pub files: Vec<FileEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the experiment described by `config`.
pub fn run(config: &ExperimentConfig, threads: usize) -> Result<RunOutcome> {
    config.validate()?;
    let pool = build_pool(threads)?;
    let (mut files, report, stream_ids, timings) = experiments::run_kind(config, &pool)?;
    let doc = report.document(config.kind, &[config.hash()]);
    let mut canonical = config.clone();
    canonical.out = None;
    files.insert(0, (CONFIG_FILE.to_string(), canonical.to_text().into_bytes()));
    files.push((SUMMARY_FILE.to_string(), json_bytes(&doc)?));
    Ok(RunOutcome {
        config: config.clone(),
        files,
        report,
        stream_ids,
        timings,
        threads: pool.current_num_threads(),
    })
}

pub(crate) fn json_bytes(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

/// Writes the result files and `manifest.json` into `dir`.
pub fn write_run(outcome: &RunOutcome, dir: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut entries = Vec::with_capacity(outcome.files.len());
    for (name, bytes) in &outcome.files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| LabError::io(&path, e))?;
        entries.push(FileEntry {
            name: name.clone(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
    }
    let manifest = RunManifest {
        artifact_version: ARTIFACT_VERSION.into(),
        kind: outcome.config.kind.name().into(),
        config_hash: outcome.config.hash(),
        seed: outcome.config.seed,
        threads: outcome.threads,
        stream_ids: outcome.stream_ids.clone(),
        timings: outcome.timings.clone(),
        files: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, json_bytes(&manifest)?).map_err(|e| LabError::io(&path, e))?;
    Ok(manifest)
}

/// Output directory: the flag, then the config's `out`, then
/// `results/<kind>-seed<seed>`.
pub fn output_dir(config: &ExperimentConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from(format!("results/{}-seed{}", config.kind.name(), config.seed)))
}

/// Pools result directories of one kind and recomputes the report.
pub fn summarize(dirs: &[PathBuf]) -> Result<serde_json::Value> {
    if dirs.is_empty() {
        return Err(LabError::invalid("runs", "no result directories given"));
    }
    let mut configs = Vec::with_capacity(dirs.len());
    for d in dirs {
        let path = d.join(CONFIG_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| LabError::io(&path, e))?;
        let cfg = ExperimentConfig::parse(None, &text, &path.display().to_string())?;
        configs.push(cfg);
    }
    let kind = configs[0].kind;
    if let Some((d, c)) = dirs.iter().zip(&configs).find(|(_, c)| c.kind != kind) {
        return Err(LabError::Schema {
            path: d.clone(),
            reason: format!("cannot pool a {} run with {} runs", c.kind.name(), kind.name()),
        });
    }
    let report = experiments::summarize_kind(kind, dirs, &configs)?;
    let hashes: Vec<String> = configs.iter().map(ExperimentConfig::hash).collect();
    let mut doc = report.document(kind, &hashes);
    let runs: Vec<String> = dirs.iter().map(|d| d.display().to_string()).collect();
    doc.as_object_mut()
        .expect("object")
        .insert("runs".into(), serde_json::json!(runs));
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jobs_come_back_sorted() {
        let pool = build_pool(2).unwrap();
        let jobs: Vec<Job> = (0..40u64)
            .rev()
            .map(|r| Job {
                n: (r % 3) as usize,
                cell: 0,
                replicate: r,
                stream: RngStream::new(0, r),
            })
            .collect();
        let (out, t) = run_jobs(&pool, jobs, |j| j.replicate * 2);
        assert!(out.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(out.iter().all(|(j, v)| *v == j.replicate * 2));
        assert_eq!(t.per_n_seconds.len(), 3);
    }

    #[test]
    fn criteria_fold_checks() {
        let c = criteria(&[
            Check::new("1", "a", true, ""),
            Check::new("1", "b", false, ""),
            Check::new("2", "c", true, ""),
        ]);
        assert_eq!(c["1"], false);
        assert_eq!(c["2"], true);
    }
}
