//! `couple`: coupling residuals and the diagonal-distance certificate.

use std::collections::BTreeSet;
use std::path::Path;

use freeness_lab_core::coupling::{couple, diagonal_distance_bound, residual_certificate};
use freeness_lab_core::stats::{log_log_slope, max, mean, median};
use freeness_lab_core::RngStream;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::format::{f17, read_csv, write_csv, write_tsv};
use crate::run::{run_jobs, Check, ErrorRow, Job, Report, Timings, ERRORS_FILE, ERROR_HEADER};

/// Slack on the certified `4π/k` distance for rounding in the phases.
pub const CERTIFICATE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupleRow {
    pub n: usize,
    pub seed: u64,
    pub replicate: u64,
    pub stream_id: u64,
    /// 1-based member index `j`.
    pub member: usize,
    #[serde(serialize_with = "f17")]
    pub residual_two_norm: f64,
    #[serde(serialize_with = "f17")]
    pub diag_distance_two_norm: f64,
    /// `|‖U_j − V_j A V_j*‖₂ − ‖B_j − A‖₂|`.
    #[serde(serialize_with = "f17")]
    pub identity_gap: f64,
    #[serde(serialize_with = "f17")]
    pub conjugation_defect: f64,
    #[serde(serialize_with = "f17")]
    pub diag_distance_op_norm: f64,
}

pub const COUPLE_HEADER: &[&str] = &[
    "n",
    "seed",
    "replicate",
    "stream_id",
    "member",
    "residual_two_norm",
    "diag_distance_two_norm",
    "identity_gap",
    "conjugation_defect",
    "diag_distance_op_norm",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub n: usize,
    pub seed: u64,
    pub replicate: u64,
    pub member: usize,
    pub k: usize,
    pub o_k_member: bool,
    #[serde(serialize_with = "f17")]
    pub diag_distance_op_norm: f64,
    #[serde(serialize_with = "f17")]
    pub bound: f64,
    /// Membership implies the distance bound.
    pub holds: bool,
}

pub const CERTIFICATE_HEADER: &[&str] = &[
    "n",
    "seed",
    "replicate",
    "member",
    "k",
    "o_k_member",
    "diag_distance_op_norm",
    "bound",
    "holds",
];

pub const COUPLE_FILE: &str = "couple.csv";
pub const CERTIFICATE_FILE: &str = "certificates.csv";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoupleTables {
    pub rows: Vec<CoupleRow>,
    pub certificates: Vec<CertificateRow>,
    pub errors: Vec<ErrorRow>,
}

pub fn run(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<(CoupleTables, Vec<u64>, Timings)> {
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
    let (done, timings) = run_jobs(pool, jobs, |job| replicate(cfg, job));
    let mut t = CoupleTables::default();
    for (job, r) in done {
        match r {
            Ok((rows, certs)) => {
                t.rows.extend(rows);
                t.certificates.extend(certs);
            }
            Err(e) => t.errors.push(ErrorRow::new(&job, cfg.seed, e)),
        }
    }
    Ok((t, streams, timings))
}

fn replicate(
    cfg: &ExperimentConfig,
    job: &Job,
) -> freeness_lab_core::Result<(Vec<CoupleRow>, Vec<CertificateRow>)> {
    let fam = couple(job.n, cfg.members, &mut job.stream.generator())?;
    let rows = fam
        .members
        .iter()
        .enumerate()
        .map(|(j, m)| CoupleRow {
            n: job.n,
            seed: cfg.seed,
            replicate: job.replicate,
            stream_id: job.stream.stream_id,
            member: j + 1,
            residual_two_norm: m.residual_two_norm,
            diag_distance_two_norm: m.diag_distance_two_norm,
            identity_gap: (m.residual_two_norm - m.diag_distance_two_norm).abs(),
            conjugation_defect: m.conjugation_defect,
            diag_distance_op_norm: m.diag_distance_op_norm,
        })
        .collect();
    let mut certs = Vec::new();
    for &k in &cfg.k_values {
        let bound = diagonal_distance_bound(k);
        for (j, (member, dist)) in residual_certificate(&fam, k)?.into_iter().enumerate() {
            certs.push(CertificateRow {
                n: job.n,
                seed: cfg.seed,
                replicate: job.replicate,
                member: j + 1,
                k,
                o_k_member: member,
                diag_distance_op_norm: dist,
                bound,
                holds: !member || dist <= bound + CERTIFICATE_SLACK,
            });
        }
    }
    Ok((rows, certs))
}

impl CoupleTables {
    pub fn files(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let medians = self.medians();
        let pts: Vec<(f64, f64)> = medians.iter().map(|&(n, m)| (n as f64, m)).collect();
        Ok(vec![
            (COUPLE_FILE.into(), write_csv(&self.rows, COUPLE_HEADER)?),
            (CERTIFICATE_FILE.into(), write_csv(&self.certificates, CERTIFICATE_HEADER)?),
            (ERRORS_FILE.into(), write_csv(&self.errors, ERROR_HEADER)?),
            ("plot_residual_median.tsv".into(), write_tsv("n", "median_residual_two_norm", &pts)),
        ])
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(Self {
            rows: read_csv(&dir.join(COUPLE_FILE), COUPLE_HEADER)?,
            certificates: read_csv(&dir.join(CERTIFICATE_FILE), CERTIFICATE_HEADER)?,
            errors: read_csv(&dir.join(ERRORS_FILE), ERROR_HEADER)?,
        })
    }

    pub fn merge(&mut self, other: Self) {
        self.rows.extend(other.rows);
        self.certificates.extend(other.certificates);
        self.errors.extend(other.errors);
        self.rows.sort_by_key(|r| (r.n, r.seed, r.replicate, r.member));
        self.certificates.sort_by_key(|r| (r.n, r.k, r.seed, r.replicate, r.member));
        self.errors.sort_by_key(|r| (r.n, r.seed, r.replicate));
    }

    fn ns(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Median residual per `n`, pooled over members and replicates.
    pub fn medians(&self) -> Vec<(usize, f64)> {
        self.ns()
            .into_iter()
            .map(|n| {
                let xs: Vec<f64> = self.rows.iter().filter(|r| r.n == n).map(|r| r.residual_two_norm).collect();
                (n, median(&xs))
            })
            .collect()
    }

    pub fn report(&self, cfg: &ExperimentConfig) -> Report {
        let tol = cfg.tolerance;
        let mut per_n = Vec::new();
        for n in self.ns() {
            let rows: Vec<&CoupleRow> = self.rows.iter().filter(|r| r.n == n).collect();
            let res: Vec<f64> = rows.iter().map(|r| r.residual_two_norm).collect();
            let ks: Vec<serde_json::Value> = self
                .certificates
                .iter()
                .filter(|c| c.n == n)
                .map(|c| c.k)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .map(|k| {
                    let cs: Vec<&CertificateRow> =
                        self.certificates.iter().filter(|c| c.n == n && c.k == k).collect();
                    let inside: Vec<f64> = cs
                        .iter()
                        .filter(|c| c.o_k_member)
                        .map(|c| c.diag_distance_op_norm)
                        .collect();
                    json!({
                        "k": k,
                        "samples": cs.len(),
                        "o_k_members": inside.len(),
                        "max_distance_in_o_k": if inside.is_empty() { None } else { Some(max(&inside)) },
                        "bound": diagonal_distance_bound(k),
                        "violations": cs.iter().filter(|c| !c.holds).count(),
                    })
                })
                .collect();
            per_n.push(json!({
                "n": n,
                "samples": rows.len(),
                "median_residual": median(&res),
                "mean_residual": mean(&res),
                "max_residual": max(&res),
                "max_conjugation_defect": max(&rows.iter().map(|r| r.conjugation_defect).collect::<Vec<_>>()),
                "max_identity_gap": max(&rows.iter().map(|r| r.identity_gap).collect::<Vec<_>>()),
                "certificates": ks,
            }));
        }
        let medians = self.medians();
        let xs: Vec<f64> = medians.iter().map(|m| m.0 as f64).collect();
        let ys: Vec<f64> = medians.iter().map(|m| m.1).collect();
        let slope = log_log_slope(&xs, &ys);

        let worst_defect = self.rows.iter().map(|r| r.conjugation_defect).fold(0.0, f64::max);
        let worst_gap = self.rows.iter().map(|r| r.identity_gap).fold(0.0, f64::max);
        let identity_ok = self
            .rows
            .iter()
            .all(|r| r.conjugation_defect <= tol && r.identity_gap <= tol);
        let decreasing = ys.windows(2).all(|w| w[1] < w[0]);
        let violations = self.certificates.iter().filter(|c| !c.holds).count();
        let members = self.certificates.iter().filter(|c| c.o_k_member).count();

        let checks = vec![
            Check::new(
                "2",
                "coupling identity",
                identity_ok && !self.rows.is_empty(),
                format!(
                    "{} samples, max defect {worst_defect:.3e}, max gap {worst_gap:.3e}, tolerance {tol:.1e}",
                    self.rows.len()
                ),
            ),
            Check::new(
                "2",
                "median residual strictly decreasing",
                decreasing,
                format!("medians {ys:?}, log-log slope {slope:.4}"),
            ),
            Check::new(
                "3",
                "diagonal distance on O_k",
                violations == 0,
                format!(
                    "{members} of {} samples in O_k, {violations} exceed 4π/k",
                    self.certificates.len()
                ),
            ),
            Check::no_failures(&self.errors),
        ];
        Report {
            body: json!({
                "per_n": per_n,
                "residual_decay_slope": slope,
                "failed_replicates": self.errors.len(),
            }),
            checks,
        }
    }
}
