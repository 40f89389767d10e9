use std::path::PathBuf;

use freeness_lab::config::{ExperimentConfig, ExperimentKind};
use freeness_lab::experiments::band::{BandTables, InstanceKind};
use freeness_lab::run::{run, summarize, write_run, SUMMARY_FILE};
use freeness_lab::LabError;

fn written(cfg: &ExperimentConfig, dir: &std::path::Path) -> PathBuf {
    let outcome = run(cfg, 1).unwrap();
    write_run(&outcome, dir).unwrap();
    dir.to_path_buf()
}

fn esd(seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(ExperimentKind::Esd);
    c.n_grid = vec![4, 6];
    c.reps = 30;
    c.seed = seed;
    c
}

#[test]
fn single_run_summary_is_the_run_summary() {
    for kind in [ExperimentKind::Esd, ExperimentKind::Couple, ExperimentKind::Freeness] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::defaults(kind);
        cfg.n_grid = vec![6, 12];
        cfg.reps = 4;
        cfg.restarts = 2;
        let d = written(&cfg, dir.path());
        let mut doc = summarize(&[d.clone()]).unwrap();
        doc.as_object_mut().unwrap().remove("runs");
        let stored: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join(SUMMARY_FILE)).unwrap()).unwrap();
        assert_eq!(doc, stored, "{}", kind.name());
    }
}

#[test]
fn two_seeds_pool_their_replicates() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let da = written(&esd(1), a.path());
    let db = written(&esd(2), b.path());
    let doc = summarize(&[da.clone(), db.clone()]).unwrap();
    assert_eq!(doc["per_n"][0]["replicates"], 60);
    assert_eq!(doc["config_hashes"].as_array().unwrap().len(), 2);
    assert_ne!(doc["config_hashes"][0], doc["config_hashes"][1]);

    let one = summarize(&[da]).unwrap();
    let other = summarize(&[db]).unwrap();
    let pooled = doc["per_n"][0]["mean_trace"].as_f64().unwrap();
    let separate = (one["per_n"][0]["mean_trace"].as_f64().unwrap() + other["per_n"][0]["mean_trace"].as_f64().unwrap()) / 2.0;
    assert!((pooled - separate).abs() < 1e-15);
}

#[test]
fn mixing_kinds_or_broken_tables_is_a_schema_error() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let da = written(&esd(1), a.path());
    let mut couple = ExperimentConfig::defaults(ExperimentKind::Couple);
    couple.n_grid = vec![4];
    couple.reps = 2;
    let db = written(&couple, b.path());
    assert!(matches!(summarize(&[da.clone(), db]), Err(LabError::Schema { .. })));

    let csv = da.join("weingarten.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    std::fs::write(&csv, text.replacen("trace_re", "trace_real", 1)).unwrap();
    assert!(matches!(summarize(&[da.clone()]), Err(LabError::Schema { .. })));

    std::fs::write(&csv, text + "4,1,0,0,not-a-number,0,0\n").unwrap();
    assert!(matches!(summarize(&[da]), Err(LabError::Schema { .. })));
}

#[test]
fn recorded_replicate_failures_fail_the_run_gate_only() {
    let a = tempfile::tempdir().unwrap();
    let d = written(&esd(4), a.path());
    let errors = d.join("errors.csv");
    let mut text = std::fs::read_to_string(&errors).unwrap();
    text.push_str("6,4,99,0,eigendecomposition failed\n");
    std::fs::write(&errors, text).unwrap();
    let doc = summarize(&[d]).unwrap();
    assert_eq!(doc["criteria"]["run"], false);
    assert_eq!(doc["criteria"]["4"], true);
    assert_eq!(doc["per_n"][1]["replicates"], 30);
}

#[test]
fn band_suite_has_no_membership_failures() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Band);
    cfg.n_grid = vec![8, 16, 32];
    cfg.epsilons = vec![0.1, 0.25];
    cfg.reps = 200;
    let d = written(&cfg, dir.path());
    let tables = BandTables::read(&d).unwrap();
    assert_eq!(tables.rows.len(), 1200);
    assert!(tables.rows.iter().all(|r| r.member_ok));
    for kind in ["gaussian", "narrow_band", "toeplitz_kernel", "shift_half"] {
        assert_eq!(tables.rows.iter().filter(|r| r.kind == kind).count(), 300);
    }
    assert_eq!(InstanceKind::for_replicate(7).name(), "shift_half");
}

#[test]
fn freeness_summary_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Freeness);
    cfg.n_grid = vec![8, 16];
    cfg.reps = 2;
    cfg.restarts = 2;
    let d = written(&cfg, dir.path());
    let doc = summarize(&[d]).unwrap();
    let s = &doc["summaries"][0];
    for key in ["max_abs_moment", "median_abs_moment", "se_abs_moment", "error_budget"] {
        assert!(s.get(key).is_some(), "{key}");
    }
    assert!((s["error_budget"].as_f64().unwrap() - 39.5556894399339).abs() < 1e-9);
    assert!(doc["trends"][0].get("decay_slope").is_some());
}
