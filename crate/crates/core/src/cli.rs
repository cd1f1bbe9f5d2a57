//! Batch runner behind the `kaehlerlab` binary.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::GeomError;
use crate::identities::{self, Tolerances};
use crate::recurrence::{self, RecurrenceTolerances};
use crate::report::{AmbientSummary, Aggregates, CaseReport, PointReport, Report, SkippedPoint, SCHEMA_VERSION};
use crate::sampling::{halton_points, point_seed};
use crate::submanifold::{catalog, compute, find_case, ComputeOptions, ExpectedClass, ImmersionCase};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILURE: i32 = 1;
pub const EXIT_CLASS_MISMATCH: i32 = 2;
pub const EXIT_CONFIG: i32 = 64;

pub const DEFAULT_POINTS: usize = 25;
pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "KAEHLERLAB_SEED";

/// Tolerance keys that feed the classifier rather than the identity suite.
pub const TOL_B_KEY: &str = "recurrence.tol_b";
pub const TOL_KEY: &str = "recurrence.tol";
pub const THEOREM_TOL_KEY: &str = "theorem.tol";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Optional fields of a JSON config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub cases: Option<Vec<String>>,
    pub points: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cases: Vec<String>,
    pub points: usize,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cases: vec!["all".to_string()],
            points: DEFAULT_POINTS,
            seed: DEFAULT_SEED,
            tolerances: BTreeMap::new(),
            out: None,
            format: Format::Json,
        }
    }
}

/// Validated form of a [`RunConfig`].
struct Plan {
    /// Selected cases in catalog order, with their catalog index.
    cases: Vec<(usize, ImmersionCase)>,
    tolerances: Tolerances,
    recurrence: RecurrenceTolerances,
}

impl RunConfig {
    fn plan(&self) -> Result<Plan, ConfigError> {
        if self.points == 0 {
            return Err(ConfigError("points must be at least 1".into()));
        }
        let mut cases = Vec::new();
        for name in &self.cases {
            if name == "all" {
                cases.extend(catalog());
            } else {
                let case = find_case(name).ok_or_else(|| ConfigError(format!("unknown case '{name}'")))?;
                cases.push(case);
            }
        }
        if cases.is_empty() {
            return Err(ConfigError("no cases selected".into()));
        }
        let order: Vec<&str> = catalog().iter().map(|c| c.name).collect();
        let index = |c: &ImmersionCase| order.iter().position(|n| *n == c.name).expect("catalog case");
        cases.sort_by_key(|c| index(c));
        cases.dedup_by_key(|c| c.name);
        let cases = cases.into_iter().map(|c| (index(&c), c)).collect();

        let mut tolerances = Tolerances::default();
        let mut rec = RecurrenceTolerances::default();
        for (id, &tol) in &self.tolerances {
            if !(tol >= 0.0) {
                return Err(ConfigError(format!("tolerance for '{id}' must be non-negative")));
            }
            match id.as_str() {
                TOL_B_KEY => rec.tol_b = tol,
                TOL_KEY => rec.tol = tol,
                THEOREM_TOL_KEY => rec.theorem_tol = tol,
                _ => tolerances
                    .set(id, tol)
                    .map_err(|id| ConfigError(format!("unknown tolerance id '{id}'")))?,
            }
        }
        Ok(Plan {
            cases,
            tolerances,
            recurrence: rec,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: Report,
    pub exit_code: i32,
}

enum PointOutcome {
    Done(PointReport),
    Skipped(SkippedPoint),
    Failed(SkippedPoint),
}

fn evaluate_point(case: &ImmersionCase, u: &[f64], seed: u64, plan: &Plan) -> PointOutcome {
    let result = (|| -> Result<PointReport, GeomError> {
        let data = compute(case, u, &ComputeOptions::default())?;
        let checks = identities::run_identity_suite_with(&data, &case.ambient, seed, &plan.tolerances)?;
        let rec = recurrence::classify(&data, &plan.recurrence)?;
        let theorems = recurrence::verify_theorems(&rec, &plan.recurrence);
        Ok(PointReport {
            u: u.to_vec(),
            checks,
            recurrence: rec,
            theorems,
        })
    })();
    match result {
        Ok(p) => PointOutcome::Done(p),
        Err(e) => {
            let entry = SkippedPoint {
                u: u.to_vec(),
                reason: e.to_string(),
            };
            match e {
                GeomError::NotImmersion { .. } | GeomError::DegenerateFrame { .. } | GeomError::Singular(_) => {
                    PointOutcome::Skipped(entry)
                }
                _ => PointOutcome::Failed(entry),
            }
        }
    }
}

/// Evaluates every selected case; the report does not depend on thread scheduling.
pub fn run(config: &RunConfig) -> Result<RunOutcome, ConfigError> {
    let plan = config.plan()?;
    let jobs: Vec<(usize, usize, Vec<f64>)> = plan
        .cases
        .iter()
        .enumerate()
        .flat_map(|(ci, (cat, case))| {
            // points depend on the catalog position, not on which other cases were selected
            halton_points(&case.domain, config.points, point_seed(config.seed, *cat, usize::MAX))
                .into_iter()
                .enumerate()
                .map(move |(pi, u)| (ci, pi, u))
        })
        .collect();
    let outcomes: Vec<(usize, PointOutcome)> = jobs
        .par_iter()
        .map(|(ci, pi, u)| {
            let (cat, case) = &plan.cases[*ci];
            let seed = point_seed(config.seed, *cat, *pi);
            (*ci, evaluate_point(case, u, seed, &plan))
        })
        .collect();

    let mut cases: Vec<CaseReport> = plan
        .cases
        .iter()
        .map(|(_, c)| CaseReport {
            name: c.name.to_string(),
            ambient: AmbientSummary {
                kind: c.ambient.kind(),
                c: c.ambient.c(),
                m: c.m,
                l: c.l(),
            },
            expected_class: c.expected_class,
            points: Vec::new(),
            skipped: Vec::new(),
            errors: Vec::new(),
            aggregates: Aggregates::from_points(ExpectedClass::Generic, &[], 0),
        })
        .collect();
    for (ci, outcome) in outcomes {
        match outcome {
            PointOutcome::Done(p) => cases[ci].points.push(p),
            PointOutcome::Skipped(s) => cases[ci].skipped.push(s),
            PointOutcome::Failed(s) => cases[ci].errors.push(s),
        }
    }
    let mut exit_code = EXIT_OK;
    let mut mismatch = false;
    for c in &mut cases {
        c.aggregates = Aggregates::from_points(c.expected_class, &c.points, c.errors.len());
        if !c.aggregates.checks_passed || !c.aggregates.theorems_passed {
            exit_code = EXIT_CHECK_FAILURE;
        }
        mismatch |= !c.aggregates.class_matched;
    }
    if exit_code == EXIT_OK && mismatch {
        exit_code = EXIT_CLASS_MISMATCH;
    }
    Ok(RunOutcome {
        report: Report {
            schema: SCHEMA_VERSION,
            seed: config.seed,
            points_per_case: config.points,
            cases,
        },
        exit_code,
    })
}

#[derive(Debug, Parser)]
#[command(name = "kaehlerlab", version, about = "Numerical checks for complex submanifolds of complex space forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the immersion catalog.
    List {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run the checks and write a report.
    Run(RunArgs),
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Case name, repeatable, or "all".
    #[arg(long = "case")]
    pub cases: Vec<String>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tolerance override as <id>=<value>, repeatable.
    #[arg(long = "tol", value_parser = parse_tol)]
    pub tols: Vec<(String, f64)>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (id, v) = s.split_once('=').ok_or_else(|| format!("expected <id>=<value>, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad tolerance value '{v}': {e}"))?;
    Ok((id.trim().to_string(), v))
}

fn env_seed() -> Result<Option<u64>, ConfigError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| ConfigError(format!("{SEED_ENV} is not a u64: '{s}'"))),
        Err(_) => Ok(None),
    }
}

fn read_config(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("bad config {}: {e}", path.display())))
}

impl RunArgs {
    /// Merges flags over the config file over the environment over defaults.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let file = match &self.config {
            Some(p) => read_config(p)?,
            None => ConfigFile::default(),
        };
        let mut cfg = RunConfig::default();
        if let Some(c) = file.cases {
            cfg.cases = c;
        }
        if !self.cases.is_empty() {
            cfg.cases = self.cases.clone();
        }
        cfg.points = self.points.or(file.points).unwrap_or(DEFAULT_POINTS);
        cfg.seed = match self.seed.or(file.seed) {
            Some(s) => s,
            None => env_seed()?.unwrap_or(DEFAULT_SEED),
        };
        cfg.tolerances = file.tolerances;
        for (id, v) in &self.tols {
            cfg.tolerances.insert(id.clone(), *v);
        }
        cfg.out = self.out.clone().or(file.out);
        cfg.format = self.format.or(file.format).unwrap_or_default();
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct CaseListing {
    name: &'static str,
    m: usize,
    l: usize,
    ambient: crate::ambient::AmbientKind,
    c: f64,
    expected_class: ExpectedClass,
}

pub fn list_cases(format: Format) -> String {
    let rows: Vec<CaseListing> = catalog()
        .into_iter()
        .map(|c| CaseListing {
            name: c.name,
            m: c.m,
            l: c.l(),
            ambient: c.ambient.kind(),
            c: c.ambient.c(),
            expected_class: c.expected_class,
        })
        .collect();
    match format {
        Format::Json => serde_json::to_string_pretty(&rows).expect("listing serializes") + "\n",
        Format::Text => {
            let mut out = format!("{:<14} {:>2} {:>2} {:<13} {:>4} {}\n", "name", "m", "l", "ambient", "c", "expected");
            for r in rows {
                let kind = match r.ambient {
                    crate::ambient::AmbientKind::Flat => "Flat",
                    crate::ambient::AmbientKind::FubiniStudy => "FubiniStudy",
                };
                let class = match r.expected_class {
                    ExpectedClass::TotallyGeodesic => "TotallyGeodesic",
                    ExpectedClass::Parallel => "Parallel",
                    ExpectedClass::Generic => "Generic",
                };
                out.push_str(&format!("{:<14} {:>2} {:>2} {:<13} {:>4} {}\n", r.name, r.m, r.l, kind, r.c, class));
            }
            out
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::List { format } => {
            print!("{}", list_cases(format));
            EXIT_OK
        }
        Command::Run(args) => match execute(&args) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("kaehlerlab: {e}");
                EXIT_CONFIG
            }
        },
    }
}

fn execute(args: &RunArgs) -> Result<i32, ConfigError> {
    let cfg = args.resolve()?;
    let outcome = run(&cfg)?;
    let body = match cfg.format {
        Format::Json => outcome.report.to_json(),
        Format::Text => outcome.report.to_text(),
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| ConfigError(format!("cannot write report {}: {e}", path.display())))?,
        None => print!("{body}"),
    }
    Ok(outcome.exit_code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tol_parsing() {
        assert_eq!(parse_tol("gauss_equation=1e-15").unwrap(), ("gauss_equation".into(), 1e-15));
        assert!(parse_tol("gauss_equation").is_err());
        assert!(parse_tol("a=x").is_err());
    }

    #[test]
    fn unknown_names_are_config_errors() {
        let cfg = RunConfig {
            cases: vec!["foo".into()],
            ..RunConfig::default()
        };
        assert!(run(&cfg).is_err());
        let mut cfg = RunConfig::default();
        cfg.tolerances.insert("nope".into(), 1.0);
        assert!(run(&cfg).is_err());
        let cfg = RunConfig {
            points: 0,
            ..RunConfig::default()
        };
        assert!(run(&cfg).is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"cases": ["linear_c2"], "points": 3, "seed": 5, "tolerances": {"gauss_equation": 1e-3}}"#)
            .unwrap();
        let args = RunArgs {
            config: Some(path),
            points: Some(4),
            tols: vec![("shape_trace".into(), 1e-2)],
            ..RunArgs::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.cases, vec!["linear_c2".to_string()]);
        assert_eq!((cfg.points, cfg.seed), (4, 5));
        assert_eq!(cfg.tolerances.len(), 2);
    }

    #[test]
    fn listing_names_every_case() {
        let text = list_cases(Format::Text);
        for name in ["linear_c2", "graph_z2_c2", "graph_z3_c2", "graph_c3", "veronese_cp2"] {
            assert!(text.contains(name));
        }
        assert!(text.contains("veronese_cp2    1  1 FubiniStudy      4 Parallel"));
    }
}
