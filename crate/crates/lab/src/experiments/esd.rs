//! `esd`: eigenvalue phases of Haar unitaries and the two-unitary
//! Weingarten moment `tr_n(U₁U₂U₁*U₂*)`.

use std::collections::BTreeSet;
use std::path::Path;

use freeness_lab_core::freeness::product_trace;
use freeness_lab_core::haar::{esd, sample_haar_unitary};
use freeness_lab_core::stats::{kolmogorov_to_uniform, mean, std_error};
use freeness_lab_core::RngStream;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::format::{f17, read_csv, write_csv, write_tsv};
use crate::run::{run_jobs, Check, ErrorRow, Job, Report, Timings, ERRORS_FILE, ERROR_HEADER};

/// Standard errors allowed between the sample mean and `1/n²`.
pub const WEINGARTEN_SE_MULTIPLIER: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub n: usize,
    pub seed: u64,
    pub replicate: u64,
    /// 1-based position in increasing phase order.
    pub index: usize,
    #[serde(serialize_with = "f17")]
    pub phase: f64,
}

pub const PHASE_HEADER: &[&str] = &["n", "seed", "replicate", "index", "phase"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: usize,
    pub seed: u64,
    pub replicate: u64,
    pub stream_id: u64,
    /// Real and imaginary part of `tr_n(U₁U₂U₁*U₂*)`.
    #[serde(serialize_with = "f17")]
    pub trace_re: f64,
    #[serde(serialize_with = "f17")]
    pub trace_im: f64,
    /// Kolmogorov distance of the phases of `U₁` to the uniform law.
    #[serde(serialize_with = "f17")]
    pub ks_distance: f64,
}

pub const MOMENT_HEADER: &[&str] = &["n", "seed", "replicate", "stream_id", "trace_re", "trace_im", "ks_distance"];

pub const PHASE_FILE: &str = "esd.csv";
pub const MOMENT_FILE: &str = "weingarten.csv";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EsdTables {
    pub phases: Vec<PhaseRow>,
    pub moments: Vec<MomentRow>,
    pub errors: Vec<ErrorRow>,
}

pub fn run(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<(EsdTables, Vec<u64>, Timings)> {
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
    let (done, timings) = run_jobs(pool, jobs, |job| replicate(cfg.seed, job));
    let mut t = EsdTables::default();
    for (job, r) in done {
        match r {
            Ok((phases, moment)) => {
                t.phases.extend(phases);
                t.moments.push(moment);
            }
            Err(e) => t.errors.push(ErrorRow::new(&job, cfg.seed, e)),
        }
    }
    Ok((t, streams, timings))
}

fn replicate(seed: u64, job: &Job) -> freeness_lab_core::Result<(Vec<PhaseRow>, MomentRow)> {
    let mut rng = job.stream.generator();
    let u1 = sample_haar_unitary(job.n, &mut rng)?;
    let u2 = sample_haar_unitary(job.n, &mut rng)?;
    let mu = esd(&u1)?;
    let (a1, a2) = (u1.adjoint(), u2.adjoint());
    let tr = product_trace(&[u1.as_matrix(), u2.as_matrix(), a1.as_matrix(), a2.as_matrix()])?;
    let phases = mu
        .phases()
        .iter()
        .enumerate()
        .map(|(i, &p)| PhaseRow {
            n: job.n,
            seed,
            replicate: job.replicate,
            index: i + 1,
            phase: p,
        })
        .collect();
    Ok((
        phases,
        MomentRow {
            n: job.n,
            seed,
            replicate: job.replicate,
            stream_id: job.stream.stream_id,
            trace_re: tr.re,
            trace_im: tr.im,
            ks_distance: kolmogorov_to_uniform(mu.phases()),
        },
    ))
}

impl EsdTables {
    pub fn files(&self) -> Result<Vec<(String, Vec<u8>)>> {
        // empirical CDF of the pooled phases at the largest n
        let n_max = self.phases.iter().map(|p| p.n).max();
        let mut pooled: Vec<f64> = self
            .phases
            .iter()
            .filter(|p| Some(p.n) == n_max)
            .map(|p| p.phase)
            .collect();
        pooled.sort_by(f64::total_cmp);
        let total = pooled.len() as f64;
        let cdf: Vec<(f64, f64)> = pooled
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, (i + 1) as f64 / total))
            .collect();
        Ok(vec![
            (PHASE_FILE.into(), write_csv(&self.phases, PHASE_HEADER)?),
            (MOMENT_FILE.into(), write_csv(&self.moments, MOMENT_HEADER)?),
            (ERRORS_FILE.into(), write_csv(&self.errors, ERROR_HEADER)?),
            ("plot_phase_cdf.tsv".into(), write_tsv("phase", "empirical_cdf", &cdf)),
        ])
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(Self {
            phases: read_csv(&dir.join(PHASE_FILE), PHASE_HEADER)?,
            moments: read_csv(&dir.join(MOMENT_FILE), MOMENT_HEADER)?,
            errors: read_csv(&dir.join(ERRORS_FILE), ERROR_HEADER)?,
        })
    }

    pub fn merge(&mut self, other: Self) {
        self.phases.extend(other.phases);
        self.moments.extend(other.moments);
        self.errors.extend(other.errors);
        self.phases.sort_by_key(|p| (p.n, p.seed, p.replicate, p.index));
        self.moments.sort_by_key(|m| (m.n, m.seed, m.replicate));
        self.errors.sort_by_key(|r| (r.n, r.seed, r.replicate));
    }

    pub fn report(&self) -> Report {
        let ns: BTreeSet<usize> = self.moments.iter().map(|m| m.n).collect();
        let mut per_n = Vec::new();
        let mut checks = Vec::new();
        for n in ns {
            let tr: Vec<f64> = self.moments.iter().filter(|m| m.n == n).map(|m| m.trace_re).collect();
            let ks: Vec<f64> = self.moments.iter().filter(|m| m.n == n).map(|m| m.ks_distance).collect();
            let target = 1.0 / (n * n) as f64;
            let (m, se) = (mean(&tr), std_error(&tr));
            let z = (m - target) / se;
            per_n.push(json!({
                "n": n,
                "replicates": tr.len(),
                "mean_trace": m,
                "se_trace": se,
                "target": target,
                "z": z,
                "mean_ks_distance": mean(&ks),
            }));
            if tr.len() >= 2 {
                checks.push(Check::new(
                    "4",
                    &format!("Weingarten mean at n = {n}"),
                    (m - target).abs() <= WEINGARTEN_SE_MULTIPLIER * se,
                    format!("mean {m:.6e}, target {target:.6e}, SE {se:.3e}, z {z:.3}"),
                ));
            }
        }
        checks.push(Check::no_failures(&self.errors));
        Report {
            body: json!({
                "per_n": per_n,
                "failed_replicates": self.errors.len(),
            }),
            checks,
        }
    }
}
