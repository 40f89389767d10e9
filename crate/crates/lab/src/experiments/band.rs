//! `band`: the band projection bounds on random and structured instances,
//! plus exact band combinatorics and a toy covering net.

use std::collections::BTreeSet;
use std::path::Path;

use freeness_lab_core::band::{
    band_commutator_constant, band_entry_count, band_half_width, band_project, circular_distance,
    covering_log_bound, greedy_net_indices, sample_band_ball, BandPattern,
};
use freeness_lab_core::coupling::ReferenceDiagonal;
use freeness_lab_core::haar::sample_ginibre;
use freeness_lab_core::linalg::commutator;
use freeness_lab_core::{c64, ComplexMatrix, RngStream};
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::format::{f17, f17_opt, read_csv, write_csv, write_tsv};
use crate::run::{run_jobs, Check, ErrorRow, Job, Report, Timings, ERRORS_FILE, ERROR_HEADER};

/// Relative slack on both inequalities for floating-point rounding.
pub const BOUND_SLACK: f64 = 1e-12;

/// Points drawn for the `n = 2` covering net.
pub const NET_POINTS: usize = 64;

/// Instance families, chosen by `replicate % 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceKind {
    /// Ginibre matrix scaled by `1/√n`.
    Gaussian,
    /// Ginibre entries restricted to circular distance `≤ max(1, n/16)`.
    NarrowBand,
    /// Random coefficients along each cyclic diagonal with a Gaussian
    /// profile of width `max(1, n/32)` in the circular distance.
    ToeplitzKernel,
    /// Random phases times the cyclic shift by `⌊n/2⌋`: all mass far from
    /// the band.
    ShiftHalf,
}

impl InstanceKind {
    pub fn for_replicate(rep: u64) -> Self {
        match rep % 4 {
            0 => InstanceKind::Gaussian,
            1 => InstanceKind::NarrowBand,
            2 => InstanceKind::ToeplitzKernel,
            _ => InstanceKind::ShiftHalf,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InstanceKind::Gaussian => "gaussian",
            InstanceKind::NarrowBand => "narrow_band",
            InstanceKind::ToeplitzKernel => "toeplitz_kernel",
            InstanceKind::ShiftHalf => "shift_half",
        }
    }

    pub fn sample(self, n: usize, stream: RngStream) -> freeness_lab_core::Result<ComplexMatrix> {
        let g = sample_ginibre(n, &mut stream.generator());
        let s = 1.0 / (n as f64).sqrt();
        let zero = c64::new(0.0, 0.0);
        let cyc = |i: usize, j: usize| {
            let d = i.abs_diff(j);
            d.min(n - d)
        };
        match self {
            InstanceKind::Gaussian => Ok(g.scale(c64::new(s, 0.0))),
            InstanceKind::NarrowBand => {
                let w = (n / 16).max(1);
                ComplexMatrix::from_fn(n, |i, j| if cyc(i, j) <= w { g.get(i, j) * s } else { zero })
            }
            InstanceKind::ToeplitzKernel => {
                let sigma = (n as f64 / 32.0).max(1.0);
                ComplexMatrix::from_fn(n, |i, j| {
                    let d = cyc(i, j) as f64;
                    g.get(0, (j + n - i) % n) * (-d * d / (2.0 * sigma * sigma)).exp()
                })
            }
            InstanceKind::ShiftHalf => {
                let h = n / 2;
                ComplexMatrix::from_fn(n, |i, j| {
                    if (j + h) % n == i {
                        let z = g.get(i, i);
                        let r = z.norm();
                        if r > 0.0 {
                            z / r
                        } else {
                            c64::new(1.0, 0.0)
                        }
                    } else {
                        zero
                    }
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub n: usize,
    #[serde(serialize_with = "f17")]
    pub epsilon: f64,
    pub kind: String,
    pub seed: u64,
    pub replicate: u64,
    pub stream_id: u64,
    #[serde(serialize_with = "f17")]
    pub commutator_two_norm: f64,
    /// `‖B − B_ε‖₂`.
    #[serde(serialize_with = "f17")]
    pub lhs_two_norm: f64,
    /// `(8√π/ε)‖[A, B]‖₂`.
    #[serde(serialize_with = "f17")]
    pub rhs_bound: f64,
    /// `‖B_ε‖ / ‖B‖`.
    #[serde(serialize_with = "f17")]
    pub op_norm_ratio: f64,
    pub bound_ok: bool,
    pub ratio_ok: bool,
    /// `B_ε` vanishes outside the band pattern.
    pub member_ok: bool,
}

pub const BAND_HEADER: &[&str] = &[
    "n",
    "epsilon",
    "kind",
    "seed",
    "replicate",
    "stream_id",
    "commutator_two_norm",
    "lhs_two_norm",
    "rhs_bound",
    "op_norm_ratio",
    "bound_ok",
    "ratio_ok",
    "member_ok",
];

impl BandRow {
    pub fn ok(&self) -> bool {
        self.bound_ok && self.ratio_ok && self.member_ok
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub n: usize,
    #[serde(serialize_with = "f17")]
    pub epsilon: f64,
    /// From the closed-form counter.
    pub entry_count: u64,
    /// By enumerating all index pairs.
    pub enumerated: u64,
    /// `n(2⌊εn⌋ + 1)`.
    pub formula: u64,
    pub count_ok: bool,
    /// `2ε log(3R/ε)`, empty unless `ε < R`.
    #[serde(serialize_with = "f17_opt")]
    pub covering_log_bound: Option<f64>,
}

pub const COUNT_HEADER: &[&str] = &[
    "n",
    "epsilon",
    "entry_count",
    "enumerated",
    "formula",
    "count_ok",
    "covering_log_bound",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetRow {
    #[serde(serialize_with = "f17")]
    pub epsilon: f64,
    pub seed: u64,
    pub points: usize,
    pub net_size: usize,
    /// Smallest distance between two net points (`inf` for one point).
    #[serde(serialize_with = "f17")]
    pub min_separation: f64,
    /// Largest distance from a point to its nearest net point.
    #[serde(serialize_with = "f17")]
    pub max_cover_distance: f64,
    pub separated: bool,
    pub covering: bool,
}

pub const NET_HEADER: &[&str] = &[
    "epsilon",
    "seed",
    "points",
    "net_size",
    "min_separation",
    "max_cover_distance",
    "separated",
    "covering",
];

pub const BAND_FILE: &str = "band.csv";
pub const COUNT_FILE: &str = "band_counts.csv";
pub const NET_FILE: &str = "band_net.csv";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BandTables {
    pub rows: Vec<BandRow>,
    pub counts: Vec<CountRow>,
    pub nets: Vec<NetRow>,
    pub errors: Vec<ErrorRow>,
}

/// Stream of replicate `rep` in the `ε` cell `eps_idx`.
pub fn instance_stream(seed: u64, n: usize, eps_idx: usize, rep: u64) -> RngStream {
    RngStream::cell(seed, n, ((eps_idx as u64) << 24) | rep)
}

fn net_stream(seed: u64, eps_idx: usize) -> RngStream {
    RngStream::cell(seed, 2, (0xFF << 24) | eps_idx as u64)
}

pub fn run(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<(BandTables, Vec<u64>, Timings)> {
    let mut jobs = Vec::new();
    for &n in &cfg.n_grid {
        for eps_idx in 0..cfg.epsilons.len() {
            for r in 0..cfg.reps as u64 {
                jobs.push(Job {
                    n,
                    cell: eps_idx as u64,
                    replicate: r,
                    stream: instance_stream(cfg.seed, n, eps_idx, r),
                });
            }
        }
    }
    let mut streams: Vec<u64> = jobs.iter().map(|j| j.stream.stream_id).collect();
    let (done, timings) = run_jobs(pool, jobs, |job| instance(cfg, job));
    let mut t = BandTables::default();
    for (job, r) in done {
        match r {
            Ok(row) => t.rows.push(row),
            Err(e) => t.errors.push(ErrorRow::new(&job, cfg.seed, e)),
        }
    }
    for &n in &cfg.n_grid {
        for &eps in &cfg.epsilons {
            if eps < 0.5 {
                t.counts.push(count_row(n, eps, cfg.radius)?);
            }
        }
    }
    for (i, &eps) in cfg.epsilons.iter().enumerate() {
        let s = net_stream(cfg.seed, i);
        streams.push(s.stream_id);
        t.nets.push(net_row(eps, cfg.radius, cfg.seed, s)?);
    }
    Ok((t, streams, timings))
}

fn instance(cfg: &ExperimentConfig, job: &Job) -> freeness_lab_core::Result<BandRow> {
    let (n, epsilon) = (job.n, cfg.epsilons[job.cell as usize]);
    let kind = InstanceKind::for_replicate(job.replicate);
    let b = kind.sample(n, job.stream)?;
    let reference = ReferenceDiagonal::new(n);
    let proj = band_project(&b, epsilon, &reference)?;
    let comm = commutator(&reference.matrix(), &b)?.two_norm();
    let lhs = b.two_norm_distance(&proj)?;
    let rhs = band_commutator_constant(epsilon) * comm;
    let op_b = b.operator_norm()?;
    let ratio = if op_b > 0.0 { proj.operator_norm()? / op_b } else { 0.0 };
    Ok(BandRow {
        n,
        epsilon,
        kind: kind.name().into(),
        seed: cfg.seed,
        replicate: job.replicate,
        stream_id: job.stream.stream_id,
        commutator_two_norm: comm,
        lhs_two_norm: lhs,
        rhs_bound: rhs,
        op_norm_ratio: ratio,
        bound_ok: lhs <= rhs * (1.0 + BOUND_SLACK),
        ratio_ok: ratio <= 3.0 * (1.0 + BOUND_SLACK),
        member_ok: BandPattern::new(n, epsilon)?.contains(&proj),
    })
}

fn count_row(n: usize, epsilon: f64, radius: f64) -> Result<CountRow> {
    let entry_count = band_entry_count(n, epsilon)?;
    let w = band_half_width(n, epsilon) as f64;
    let mut enumerated = 0u64;
    for i in 1..=n {
        for j in 1..=n {
            if circular_distance(i, j, n)? as f64 <= w {
                enumerated += 1;
            }
        }
    }
    let formula = n as u64 * (2 * (epsilon * n as f64).floor() as u64 + 1);
    Ok(CountRow {
        n,
        epsilon,
        entry_count,
        enumerated,
        formula,
        count_ok: entry_count == enumerated && enumerated == formula,
        covering_log_bound: if epsilon < radius {
            Some(covering_log_bound(epsilon, radius)?)
        } else {
            None
        },
    })
}

fn net_row(epsilon: f64, radius: f64, seed: u64, stream: RngStream) -> Result<NetRow> {
    let pattern = BandPattern::new(2, epsilon)?;
    let mut rng = stream.generator();
    let points: Vec<ComplexMatrix> = (0..NET_POINTS).map(|_| sample_band_ball(&pattern, radius, &mut rng)).collect();
    let net = greedy_net_indices(&points, epsilon)?;
    let mut min_sep = f64::INFINITY;
    for (a, &i) in net.iter().enumerate() {
        for &j in &net[a + 1..] {
            min_sep = min_sep.min(points[i].two_norm_distance(&points[j])?);
        }
    }
    let mut max_cover: f64 = 0.0;
    for p in &points {
        let mut nearest = f64::INFINITY;
        for &i in &net {
            nearest = nearest.min(p.two_norm_distance(&points[i])?);
        }
        max_cover = max_cover.max(nearest);
    }
    Ok(NetRow {
        epsilon,
        seed,
        points: points.len(),
        net_size: net.len(),
        min_separation: min_sep,
        max_cover_distance: max_cover,
        separated: min_sep > epsilon,
        covering: max_cover <= epsilon,
    })
}

impl BandTables {
    pub fn files(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| (r.commutator_two_norm, r.lhs_two_norm))
            .collect();
        Ok(vec![
            (BAND_FILE.into(), write_csv(&self.rows, BAND_HEADER)?),
            (COUNT_FILE.into(), write_csv(&self.counts, COUNT_HEADER)?),
            (NET_FILE.into(), write_csv(&self.nets, NET_HEADER)?),
            (ERRORS_FILE.into(), write_csv(&self.errors, ERROR_HEADER)?),
            ("plot_projection_error.tsv".into(), write_tsv("commutator_two_norm", "lhs_two_norm", &pts)),
        ])
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(Self {
            rows: read_csv(&dir.join(BAND_FILE), BAND_HEADER)?,
            counts: read_csv(&dir.join(COUNT_FILE), COUNT_HEADER)?,
            nets: read_csv(&dir.join(NET_FILE), NET_HEADER)?,
            errors: read_csv(&dir.join(ERRORS_FILE), ERROR_HEADER)?,
        })
    }

    pub fn merge(&mut self, other: Self) {
        self.rows.extend(other.rows);
        self.counts.extend(other.counts);
        self.nets.extend(other.nets);
        self.errors.extend(other.errors);
        self.rows
            .sort_by(|a, b| (a.n, a.epsilon, a.seed, a.replicate).partial_cmp(&(b.n, b.epsilon, b.seed, b.replicate)).expect("finite"));
        self.counts
            .sort_by(|a, b| (a.n, a.epsilon).partial_cmp(&(b.n, b.epsilon)).expect("finite"));
        self.counts.dedup();
        self.nets
            .sort_by(|a, b| (a.epsilon, a.seed).partial_cmp(&(b.epsilon, b.seed)).expect("finite"));
        self.errors.sort_by_key(|r| (r.n, r.seed, r.replicate));
    }

    pub fn report(&self) -> Report {
        let ns: BTreeSet<usize> = self.rows.iter().map(|r| r.n).collect();
        let mut cells = Vec::new();
        for &n in &ns {
            let mut eps: Vec<f64> = self.rows.iter().filter(|r| r.n == n).map(|r| r.epsilon).collect();
            eps.sort_by(f64::total_cmp);
            eps.dedup();
            for e in eps {
                let rows: Vec<&BandRow> = self.rows.iter().filter(|r| r.n == n && r.epsilon == e).collect();
                let slack = rows
                    .iter()
                    .filter(|r| r.rhs_bound > 0.0)
                    .map(|r| r.lhs_two_norm / r.rhs_bound)
                    .fold(0.0, f64::max);
                cells.push(json!({
                    "n": n,
                    "epsilon": e,
                    "instances": rows.len(),
                    "max_lhs_over_rhs": slack,
                    "max_op_norm_ratio": rows.iter().map(|r| r.op_norm_ratio).fold(0.0, f64::max),
                    "violations": rows.iter().filter(|r| !r.ok()).count(),
                }));
            }
        }

        let bad_bound = self.rows.iter().filter(|r| !r.bound_ok).count();
        let bad_ratio = self.rows.iter().filter(|r| !r.ratio_ok).count();
        let bad_member = self.rows.iter().filter(|r| !r.member_ok).count();
        let bad_counts = self.counts.iter().filter(|c| !c.count_ok).count();

        let count_ns: BTreeSet<usize> = self.counts.iter().map(|c| c.n).collect();
        let monotone = count_ns.iter().all(|&n| {
            let mut pts: Vec<(f64, f64)> = self
                .counts
                .iter()
                .filter(|c| c.n == n)
                .filter_map(|c| c.covering_log_bound.map(|b| (c.epsilon, b)))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts.windows(2).all(|w| w[1].1 > w[0].1)
        });
        let nets_ok = self.nets.iter().all(|r| r.separated && r.covering);

        let checks = vec![
            Check::new(
                "1",
                "projection distance bound",
                bad_bound == 0 && !self.rows.is_empty(),
                format!("{bad_bound} of {} instances violate", self.rows.len()),
            ),
            Check::new("1", "operator norm ratio <= 3", bad_ratio == 0, format!("{bad_ratio} violations")),
            Check::new("1", "band pattern membership", bad_member == 0, format!("{bad_member} violations")),
            Check::new(
                "7",
                "band entry count",
                bad_counts == 0,
                format!("{bad_counts} of {} cells disagree", self.counts.len()),
            ),
            Check::new(
                "7",
                "covering bound increasing in epsilon",
                monotone,
                "2ε log(3R/ε) over the configured ε values",
            ),
            Check::new(
                "7",
                "greedy net separation and covering",
                nets_ok,
                format!("{} nets at n = 2", self.nets.len()),
            ),
            Check::no_failures(&self.errors),
        ];
        Report {
            body: json!({
                "cells": cells,
                "instances": self.rows.len(),
                "violations": self.rows.iter().filter(|r| !r.ok()).count(),
                "counts": self.counts.iter().map(|c| json!({
                    "n": c.n,
                    "epsilon": c.epsilon,
                    "entry_count": c.entry_count,
                    "covering_log_bound": c.covering_log_bound,
                })).collect::<Vec<_>>(),
                "failed_replicates": self.errors.len(),
            }),
            checks,
        }
    }
}
