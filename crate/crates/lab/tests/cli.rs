use std::path::Path;
use std::process::Command;

fn lab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_freeness-lab"));
    c.env_remove("FREENESS_LAB_THREADS");
    c
}

fn code(c: &mut Command) -> (i32, String, String) {
    let out = c.output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn successful_run_writes_results_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("esd.txt");
    write(&cfg, "kind = esd\nn_grid = 4, 8\nreps = 20\nseed = 3\n");
    let out = dir.path().join("run");
    let (status, stdout, _) = code(lab().args(["esd", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(status, 0, "{stdout}");
    assert!(stdout.contains("PASS [4]"));
    for f in ["config.txt", "esd.csv", "weingarten.csv", "errors.csv", "summary.json", "manifest.json", "plot_phase_cdf.tsv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "esd");
    assert_eq!(manifest["stream_ids"].as_array().unwrap().len(), 40);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.txt");
    write(&cfg, "kind = couple\nn_grid = 8\nreps = 2\n");
    let out = dir.path().join("run");
    let (status, _, err) = code(
        lab()
            .args(["couple", "--config"])
            .arg(&cfg)
            .args(["--seed", "5", "--reps", "3", "--k", "4", "--threads", "2", "--out"])
            .arg(&out),
    );
    assert_eq!(status, 0, "{err}");
    let text = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(text.contains("seed = 5\n") && text.contains("reps = 3\n") && text.contains("k = 4\n"), "{text}");
}

#[test]
fn configuration_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.txt");
    write(&cfg, "kind = esd\nn_grid = 8, 4\n");
    let (status, _, err) = code(lab().args(["esd", "--config"]).arg(&cfg));
    assert_eq!(status, 1);
    assert!(err.contains("n_grid"), "{err}");

    write(&cfg, "kind = band\n");
    let (status, _, err) = code(lab().args(["esd", "--config"]).arg(&cfg));
    assert_eq!(status, 1);
    assert!(err.contains("kind"), "{err}");

    let (status, _, _) = code(lab().args(["esd", "--config"]).arg(dir.path().join("missing.txt")));
    assert_eq!(status, 1);
}

#[test]
fn gate_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // a tolerance below rounding error cannot be met
    let (status, stdout, _) = code(
        lab()
            .args(["couple", "--n-grid", "8", "--reps", "2", "--tolerance", "1e-300", "--out"])
            .arg(dir.path().join("run")),
    );
    assert_eq!(status, 2, "{stdout}");
    assert!(stdout.contains("FAIL [2]"));
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (status, _, err) = code(
        lab()
            .env("FREENESS_LAB_THREADS", "3")
            .args(["esd", "--n", "4", "--reps", "4", "--out"])
            .arg(&out),
    );
    assert_eq!(status, 0, "{err}");
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 3);

    let (status, _, err) = code(lab().env("FREENESS_LAB_THREADS", "many").args(["esd", "--n", "4"]));
    assert_eq!(status, 1);
    assert!(err.contains("FREENESS_LAB_THREADS"), "{err}");
}

#[test]
fn summarize_cli() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (seed, out) in [("1", &a), ("2", &b)] {
        let (status, _, err) = code(lab().args(["esd", "--n", "4", "--reps", "10", "--seed", seed, "--out"]).arg(out));
        assert_eq!(status, 0, "{err}");
    }
    let (status, stdout, err) = code(lab().arg("summarize").arg(&a).arg(&b));
    assert_eq!(status, 0, "{err}");
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(doc["per_n"][0]["replicates"], 20);

    let (status, _, _) = code(lab().arg("summarize").arg(dir.path().join("nothing")));
    assert_eq!(status, 1);
}
