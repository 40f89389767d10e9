//! Experiment configuration.
//!
//! The text format is one `key = value` pair per line. Blank lines and
//! everything after `#` are ignored. Lists are comma separated; `words` is a
//! `;`-separated list of comma-separated index lists. Keys:
//!
//! | key          | type                | used by                    |
//! |--------------|---------------------|----------------------------|
//! | `kind`       | experiment name     | all                        |
//! | `n_grid`     | list of integers    | all (alias `n`)            |
//! | `reps`       | integer ≥ 1         | all                        |
//! | `seed`       | unsigned integer    | all                        |
//! | `out`        | path                | all                        |
//! | `members`    | integer ≥ 1         | couple (alias `m`)         |
//! | `k`          | list of integers ≥ 2| couple                     |
//! | `tolerance`  | positive real       | couple                     |
//! | `epsilon`    | list of reals       | band, freeness             |
//! | `radius`     | positive real       | freeness (alias `R`)       |
//! | `words`      | list of words       | freeness (alias `word`)    |
//! | `strategy`   | strategy name       | freeness                   |
//! | `carrier`    | `random` or poly    | freeness                   |
//! | `poly`       | polynomial          | freeness                   |
//! | `factor`     | polynomial          | freeness                   |
//! | `restarts`   | integer ≥ 1         | freeness                   |
//! | `steps`      | integer             | freeness                   |
//! | `stat`       | statistic name      | concentration              |
//! | `deltas`     | list of reals       | concentration              |
//!
//! Polynomials use the prefix syntax of
//! [`NCPolynomial::parse`](freeness_lab_core::freeness::NCPolynomial::parse).
//! A file whose first non-blank character is `{` is read as a JSON object
//! with the same keys; arrays stand for lists.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use freeness_lab_core::concentration::LipschitzStatistic;
use freeness_lab_core::freeness::{AdversaryStrategy, Carrier, FreenessParams, NCPolynomial, WordSpec};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    Couple,
    Band,
    Freeness,
    Concentration,
    Esd,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Couple,
        ExperimentKind::Band,
        ExperimentKind::Freeness,
        ExperimentKind::Concentration,
        ExperimentKind::Esd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Couple => "couple",
            ExperimentKind::Band => "band",
            ExperimentKind::Freeness => "freeness",
            ExperimentKind::Concentration => "concentration",
            ExperimentKind::Esd => "esd",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown kind {s:?} (couple, band, freeness, concentration, esd)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyName {
    PolynomialInU,
    ConjugatedBand,
    RandomRestartSearch,
}

impl StrategyName {
    pub fn name(self) -> &'static str {
        match self {
            StrategyName::PolynomialInU => "polynomial_in_u",
            StrategyName::ConjugatedBand => "conjugated_band",
            StrategyName::RandomRestartSearch => "random_restart_search",
        }
    }
}

impl FromStr for StrategyName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "polynomial_in_u" | "a" => Ok(StrategyName::PolynomialInU),
            "conjugated_band" | "b" => Ok(StrategyName::ConjugatedBand),
            "random_restart_search" | "c" => Ok(StrategyName::RandomRestartSearch),
            _ => Err(format!(
                "unknown strategy {s:?} (polynomial_in_u, conjugated_band, random_restart_search)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub members: usize,
    pub k_values: Vec<usize>,
    pub tolerance: f64,
    pub epsilons: Vec<f64>,
    pub radius: f64,
    pub words: Vec<WordSpec>,
    pub strategy: StrategyName,
    /// `None` draws random dictionary carriers.
    pub carrier: Option<NCPolynomial>,
    pub poly: NCPolynomial,
    pub factor: NCPolynomial,
    pub restarts: usize,
    pub steps: usize,
    pub stat: String,
    pub deltas: Vec<f64>,
}

fn poly(text: &str) -> NCPolynomial {
    NCPolynomial::parse(text).expect("built-in polynomial literal")
}

impl ExperimentConfig {
    /// The default suite of each experiment kind.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut c = Self {
            kind,
            n_grid: vec![64],
            reps: 1,
            seed: 1,
            out: None,
            members: 2,
            k_values: vec![4, 8, 16],
            tolerance: 1e-8,
            epsilons: vec![1.0 / 16.0],
            radius: 1.0,
            words: vec![WordSpec::new(vec![1, 2, 1, 2]).expect("alternating")],
            strategy: StrategyName::ConjugatedBand,
            carrier: None,
            poly: poly("+ x1 * 0.5 * x1 x1"),
            factor: poly("x1"),
            restarts: 10,
            steps: 0,
            stat: "trace".into(),
            deltas: vec![0.02, 0.05],
        };
        match kind {
            ExperimentKind::Couple => {
                c.n_grid = vec![64, 256, 1024];
                c.reps = 50;
            }
            ExperimentKind::Band => {
                c.n_grid = vec![8, 16, 64, 256];
                c.epsilons = vec![0.05, 0.1, 0.25, 0.6];
                c.reps = 64;
            }
            ExperimentKind::Freeness => {
                c.n_grid = vec![64, 128, 256, 512];
                c.reps = 20;
            }
            ExperimentKind::Concentration => {
                c.n_grid = vec![256];
                c.reps = 10_000;
            }
            ExperimentKind::Esd => {
                c.n_grid = vec![64, 256, 1024];
                c.reps = 4;
            }
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(LabError::invalid("n_grid", "must not be empty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::invalid("n_grid", "must be strictly increasing"));
        }
        if self.n_grid[0] < 2 {
            return Err(LabError::invalid("n_grid", "dimensions must be >= 2"));
        }
        if self.reps == 0 {
            return Err(LabError::invalid("reps", "must be >= 1"));
        }
        if self.reps > u32::MAX as usize {
            return Err(LabError::invalid("reps", "too many replicates"));
        }
        if self.members == 0 {
            return Err(LabError::invalid("members", "must be >= 1"));
        }
        if self.k_values.is_empty() || self.k_values.iter().any(|&k| k < 2) {
            return Err(LabError::invalid("k", "need one or more values >= 2"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(LabError::invalid("tolerance", "must be positive"));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(LabError::invalid("epsilon", "need one or more positive values"));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(LabError::invalid("radius", "must be positive"));
        }
        if self.words.is_empty() {
            return Err(LabError::invalid("words", "need at least one word"));
        }
        if self.restarts == 0 {
            return Err(LabError::invalid("restarts", "must be >= 1"));
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(LabError::invalid("deltas", "need one or more positive values"));
        }
        LipschitzStatistic::by_name(&self.stat).map_err(|e| LabError::invalid("stat", e.to_string()))?;
        match self.kind {
            ExperimentKind::Band => {
                if self.epsilons.iter().any(|&e| e >= 1.0) {
                    return Err(LabError::invalid("epsilon", "band widths must be below 1"));
                }
                if self.epsilons.len() > 255 {
                    return Err(LabError::invalid("epsilon", "at most 255 values"));
                }
            }
            ExperimentKind::Freeness => {
                if self.epsilons.len() != 1 {
                    return Err(LabError::invalid("epsilon", "freeness takes a single value"));
                }
                self.freeness_params()
                    .validate()
                    .map_err(|e| LabError::invalid("freeness", e.to_string()))?;
            }
            ExperimentKind::Concentration => {
                if self.reps < freeness_lab_core::concentration::MIN_TAIL_REPS {
                    return Err(LabError::invalid(
                        "reps",
                        format!("concentration needs at least {}", freeness_lab_core::concentration::MIN_TAIL_REPS),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn strategy(&self) -> AdversaryStrategy {
        let epsilon = self.epsilons[0];
        match self.strategy {
            StrategyName::PolynomialInU => AdversaryStrategy::PolynomialInU { poly: self.poly.clone() },
            StrategyName::ConjugatedBand => AdversaryStrategy::ConjugatedBand {
                epsilon,
                carrier: match &self.carrier {
                    Some(p) => Carrier::Fixed(p.clone()),
                    None => Carrier::RandomWords,
                },
            },
            StrategyName::RandomRestartSearch => AdversaryStrategy::RandomRestartSearch {
                epsilon,
                restarts: self.restarts,
                steps: self.steps,
            },
        }
    }

    pub fn freeness_params(&self) -> FreenessParams {
        FreenessParams {
            n_grid: self.n_grid.clone(),
            reps: self.reps,
            seed: self.seed,
            words: self.words.clone(),
            factor: self.factor.clone(),
            strategy: self.strategy(),
            restarts: self.restarts,
        }
    }

    /// Canonical text form: every key in a fixed order. Parsing it yields
    /// the same configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(", ");
        let flist = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "kind = {}", self.kind.name());
        let _ = writeln!(s, "n_grid = {}", list(&self.n_grid));
        let _ = writeln!(s, "reps = {}", self.reps);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {}", out.display());
        }
        let _ = writeln!(s, "members = {}", self.members);
        let _ = writeln!(s, "k = {}", list(&self.k_values));
        let _ = writeln!(s, "tolerance = {:?}", self.tolerance);
        let _ = writeln!(s, "epsilon = {}", flist(&self.epsilons));
        let _ = writeln!(s, "radius = {:?}", self.radius);
        let words: Vec<String> = self.words.iter().map(|w| w.to_string()).collect();
        let _ = writeln!(s, "words = {}", words.join("; "));
        let _ = writeln!(s, "strategy = {}", self.strategy.name());
        match &self.carrier {
            Some(p) => {
                let _ = writeln!(s, "carrier = {p}");
            }
            None => {
                let _ = writeln!(s, "carrier = random");
            }
        }
        let _ = writeln!(s, "poly = {}", self.poly);
        let _ = writeln!(s, "factor = {}", self.factor);
        let _ = writeln!(s, "restarts = {}", self.restarts);
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "stat = {}", self.stat);
        let _ = writeln!(s, "deltas = {}", flist(&self.deltas));
        s
    }

    /// SHA-256 of [`to_text`](Self::to_text) without the output path, as hex.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        Sha256::digest(c.to_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// One `key = value` assignment and where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    /// 1-based line, or 0 for command-line overrides.
    pub line: usize,
}

/// Parses the key-value text format into entries, without interpreting
/// values.
pub fn parse_entries(text: &str, origin: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(LabError::Config {
                path: origin.into(),
                line,
                field: content.into(),
                reason: "expected `key = value`".into(),
            });
        };
        let key = canonical_key(key.trim());
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(LabError::Config {
                path: origin.into(),
                line,
                field: key,
                reason: format!("already set on line {}", prev.line),
            });
        }
        out.push(Entry {
            key,
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

/// Reads a JSON object with the same keys. Arrays become comma lists;
/// nested arrays (words) become `;`-separated lists.
pub fn parse_json_entries(text: &str, origin: &str) -> Result<Vec<Entry>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let serde_json::Value::Object(map) = value else {
        return Err(LabError::Config {
            path: origin.into(),
            line: 1,
            field: "<root>".into(),
            reason: "expected a JSON object".into(),
        });
    };
    fn scalar(v: &serde_json::Value) -> String {
        match v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(","),
            other => other.to_string(),
        }
    }
    Ok(map
        .iter()
        .map(|(k, v)| {
            let value = match v {
                serde_json::Value::Array(items) if items.iter().any(|x| x.is_array()) => {
                    items.iter().map(scalar).collect::<Vec<_>>().join("; ")
                }
                serde_json::Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(", "),
                other => scalar(other),
            };
            Entry {
                key: canonical_key(k),
                value,
                line: 1,
            }
        })
        .collect())
}

fn canonical_key(key: &str) -> String {
    match key {
        "n" => "n_grid",
        "m" => "members",
        "R" => "radius",
        "word" => "words",
        "delta" => "deltas",
        other => other,
    }
    .to_string()
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

fn parse_one<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| format!("{value:?}: {e}"))
}

impl ExperimentConfig {
    /// Applies entries on top of the defaults for `kind`. A `kind` entry
    /// must agree with `kind` when both are given.
    pub fn from_entries(kind: Option<ExperimentKind>, entries: &[Entry], origin: &str) -> Result<Self> {
        let err = |e: &Entry, reason: String| LabError::Config {
            path: origin.into(),
            line: e.line,
            field: e.key.clone(),
            reason,
        };
        let declared = match entries.iter().find(|e| e.key == "kind") {
            Some(e) => Some(e.value.parse::<ExperimentKind>().map_err(|r| err(e, r))?),
            None => None,
        };
        let kind = match (kind, declared) {
            (Some(a), Some(b)) if a != b => {
                let e = entries.iter().find(|e| e.key == "kind").expect("declared");
                return Err(err(e, format!("config is for {}, not {}", b.name(), a.name())));
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => {
                return Err(LabError::invalid("kind", "no experiment kind given"));
            }
        };

        let mut c = Self::defaults(kind);
        for e in entries {
            let v = e.value.as_str();
            let r: std::result::Result<(), String> = (|| {
                match e.key.as_str() {
                    "kind" => {}
                    "n_grid" => c.n_grid = parse_list(v)?,
                    "reps" => c.reps = parse_one(v)?,
                    "seed" => c.seed = parse_one(v)?,
                    "out" => c.out = Some(PathBuf::from(v)),
                    "members" => c.members = parse_one(v)?,
                    "k" => c.k_values = parse_list(v)?,
                    "tolerance" => c.tolerance = parse_one(v)?,
                    "epsilon" => c.epsilons = parse_list(v)?,
                    "radius" => c.radius = parse_one(v)?,
                    "words" => {
                        c.words = v
                            .split(';')
                            .map(str::trim)
                            .filter(|s| !s.is_empty())
                            .map(|w| WordSpec::parse(w).map_err(|e| e.to_string()))
                            .collect::<std::result::Result<_, _>>()?
                    }
                    "strategy" => c.strategy = parse_one(v)?,
                    "carrier" => {
                        c.carrier = match v {
                            "random" => None,
                            p => Some(NCPolynomial::parse(p).map_err(|e| e.to_string())?),
                        }
                    }
                    "poly" => c.poly = NCPolynomial::parse(v).map_err(|e| e.to_string())?,
                    "factor" => c.factor = NCPolynomial::parse(v).map_err(|e| e.to_string())?,
                    "restarts" => c.restarts = parse_one(v)?,
                    "steps" => c.steps = parse_one(v)?,
                    "stat" => c.stat = v.to_string(),
                    "deltas" => c.deltas = parse_list(v)?,
                    other => return Err(format!("unknown key {other:?}")),
                }
                Ok(())
            })();
            r.map_err(|reason| err(e, reason))?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Parses configuration text (key-value or JSON).
    pub fn parse(kind: Option<ExperimentKind>, text: &str, origin: &str) -> Result<Self> {
        let entries = if text.trim_start().starts_with('{') {
            parse_json_entries(text, origin)?
        } else {
            parse_entries(text, origin)?
        };
        Self::from_entries(kind, &entries, origin)
    }
}

/// Reads raw entries from a config file.
pub fn read_entries(path: &Path) -> Result<Vec<Entry>> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let origin = path.display().to_string();
    if text.trim_start().starts_with('{') {
        parse_json_entries(&text, &origin)
    } else {
        parse_entries(&text, &origin)
    }
}

/// `load_config`: reads, parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let entries = read_entries(path)?;
    ExperimentConfig::from_entries(None, &entries, &path.display().to_string())
}

/// Command-line values merged over file entries: a flag replaces the entry
/// with the same key.
pub fn merge_overrides(mut entries: Vec<Entry>, overrides: BTreeMap<&'static str, String>) -> Vec<Entry> {
    for (key, value) in overrides {
        entries.retain(|e| e.key != key);
        entries.push(Entry {
            key: key.to_string(),
            value,
            line: 0,
        });
    }
    entries
}
