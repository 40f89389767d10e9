use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use freeness_lab::config::{merge_overrides, read_entries, ExperimentConfig, ExperimentKind};
use freeness_lab::run::{output_dir, resolve_threads, run, summarize, write_run, Check, SUMMARY_FILE};
use freeness_lab::LabError;

#[derive(Parser)]
#[command(name = "freeness-lab", version, about = "Monte Carlo experiments on approximate commutants of Haar unitaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coupling residuals and the diagonal-distance certificate.
    Couple(RunArgs),
    /// Band projection bounds, entry counts and covering nets.
    Band(RunArgs),
    /// Centered word moments of adversarial approximate commutants.
    Freeness(RunArgs),
    /// Empirical tails of a Lipschitz statistic against the Herbst bound.
    Concentration(RunArgs),
    /// Eigenvalue phases and the two-unitary Weingarten moment.
    Esd(RunArgs),
    /// Pool result directories of one kind and re-evaluate the gates.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (key = value lines, or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to FREENESS_LAB_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated dimensions.
    #[arg(long = "n-grid", visible_alias = "n")]
    n_grid: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    /// Coupled family size.
    #[arg(long, visible_alias = "m")]
    members: Option<String>,
    /// Comma-separated arc counts for the O_k certificate.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    tolerance: Option<String>,
    /// Comma-separated band widths.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    /// Word as comma-separated indices; repeat for several words.
    #[arg(long)]
    word: Vec<String>,
    /// polynomial_in_u, conjugated_band or random_restart_search.
    #[arg(long)]
    strategy: Option<String>,
    /// `random` or a prefix polynomial.
    #[arg(long)]
    carrier: Option<String>,
    #[arg(long)]
    poly: Option<String>,
    #[arg(long)]
    factor: Option<String>,
    #[arg(long)]
    restarts: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// trace, product_trace, centered_word<k> or zero.
    #[arg(long)]
    stat: Option<String>,
    /// Comma-separated tail thresholds.
    #[arg(long)]
    deltas: Option<String>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Result directories written by earlier runs.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Write summary.json here instead of printing it.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> BTreeMap<&'static str, String> {
        let mut o = BTreeMap::new();
        let pairs: [(&'static str, &Option<String>); 16] = [
            ("n_grid", &self.n_grid),
            ("reps", &self.reps),
            ("members", &self.members),
            ("k", &self.k),
            ("tolerance", &self.tolerance),
            ("epsilon", &self.epsilon),
            ("radius", &self.radius),
            ("strategy", &self.strategy),
            ("carrier", &self.carrier),
            ("poly", &self.poly),
            ("factor", &self.factor),
            ("restarts", &self.restarts),
            ("steps", &self.steps),
            ("stat", &self.stat),
            ("deltas", &self.deltas),
            ("seed", &self.seed.map(|s| s.to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                o.insert(k, v.clone());
            }
        }
        if !self.word.is_empty() {
            o.insert("words", self.word.join("; "));
        }
        o
    }

    fn config(&self, kind: ExperimentKind) -> Result<ExperimentConfig, LabError> {
        let (entries, origin) = match &self.config {
            Some(p) => (read_entries(p)?, p.display().to_string()),
            None => (Vec::new(), "<command line>".to_string()),
        };
        let entries = merge_overrides(entries, self.overrides());
        ExperimentConfig::from_entries(Some(kind), &entries, &origin)
    }
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict} [{}] {}: {}", c.criterion, c.name, c.detail);
    }
}

fn execute(kind: ExperimentKind, args: &RunArgs) -> Result<bool, LabError> {
    let cfg = args.config(kind)?;
    let threads = resolve_threads(args.threads)?;
    let outcome = run(&cfg, threads)?;
    let dir = output_dir(&cfg, args.out.clone());
    write_run(&outcome, &dir)?;
    print_checks(&outcome.report.checks);
    println!("results in {}", dir.display());
    Ok(outcome.passed())
}

fn execute_summary(args: &SummarizeArgs) -> Result<bool, LabError> {
    let doc = summarize(&args.runs)?;
    let checks: Vec<Check> = serde_json::from_value(doc["checks"].clone())?;
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| LabError::Io {
                path: dir.clone(),
                source: e,
            })?;
            let path = dir.join(SUMMARY_FILE);
            std::fs::write(&path, text).map_err(|e| LabError::Io { path, source: e })?;
            print_checks(&checks);
        }
        None => print!("{text}"),
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Couple(a) => execute(ExperimentKind::Couple, a),
        Command::Band(a) => execute(ExperimentKind::Band, a),
        Command::Freeness(a) => execute(ExperimentKind::Freeness, a),
        Command::Concentration(a) => execute(ExperimentKind::Concentration, a),
        Command::Esd(a) => execute(ExperimentKind::Esd, a),
        Command::Summarize(a) => execute_summary(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
