//! One module per experiment kind. Each produces its tables from a
//! configuration, writes and reads them as CSV, merges tables from several
//! runs and derives the gate report from the rows alone, so `summarize`
//! recomputes exactly what a run reported.

pub mod band;
pub mod concentration;
pub mod couple;
pub mod esd;
pub mod freeness;

use std::path::PathBuf;

use rayon::ThreadPool;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::run::{Report, Timings};

pub(crate) type KindOutput = (Vec<(String, Vec<u8>)>, Report, Vec<u64>, Timings);

pub(crate) fn run_kind(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<KindOutput> {
    Ok(match cfg.kind {
        ExperimentKind::Couple => {
            let (t, s, tm) = couple::run(cfg, pool)?;
            (t.files()?, t.report(cfg), s, tm)
        }
        ExperimentKind::Band => {
            let (t, s, tm) = band::run(cfg, pool)?;
            (t.files()?, t.report(), s, tm)
        }
        ExperimentKind::Freeness => {
            let (t, s, tm) = freeness::run(cfg, pool)?;
            (t.files(cfg)?, t.report(cfg)?, s, tm)
        }
        ExperimentKind::Concentration => {
            let (t, s, tm) = concentration::run(cfg, pool)?;
            (t.files(cfg)?, t.report(cfg)?, s, tm)
        }
        ExperimentKind::Esd => {
            let (t, s, tm) = esd::run(cfg, pool)?;
            (t.files()?, t.report(), s, tm)
        }
    })
}

/// Reads and pools the tables of several runs; parameters not recorded in
/// the rows come from the first configuration.
pub(crate) fn summarize_kind(kind: ExperimentKind, dirs: &[PathBuf], configs: &[ExperimentConfig]) -> Result<Report> {
    let cfg = &configs[0];
    macro_rules! pooled {
        ($table:ty) => {{
            let mut acc = <$table>::default();
            for d in dirs {
                acc.merge(<$table>::read(d)?);
            }
            acc
        }};
    }
    Ok(match kind {
        ExperimentKind::Couple => pooled!(couple::CoupleTables).report(cfg),
        ExperimentKind::Band => pooled!(band::BandTables).report(),
        ExperimentKind::Freeness => pooled!(freeness::FreenessTables).report(cfg)?,
        ExperimentKind::Concentration => pooled!(concentration::ConcentrationTables).report(cfg)?,
        ExperimentKind::Esd => pooled!(esd::EsdTables).report(),
    })
}
