//! Scenario registry and artifact writer for the `qdyn` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod params;
pub mod scenarios;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use config::ScenarioConfig;
pub use error::{HarnessError, Result};
pub use params::{ParamSpec, ParamValue, Params};
pub use table::{Cell, Table};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Inputs handed to a scenario runner.
pub struct Ctx<'a> {
    pub params: &'a Params,
    pub seed: u64,
}

/// A pass/fail condition evaluated during a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    /// Passes when `value ≥ limit`.
    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            limit,
            passed: value >= limit,
        }
    }
}

/// One entry of the truncation-convergence report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationNote {
    pub quantity: String,
    pub value: f64,
    /// Informational threshold; exceeding it is reported, not fatal.
    pub threshold: f64,
}

impl TruncationNote {
    pub fn new(quantity: &str, value: f64, threshold: f64) -> Self {
        Self {
            quantity: quantity.to_string(),
            value,
            threshold,
        }
    }
}

/// What a scenario hands back before serialization.
#[derive(Clone, Debug, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub truncation: Vec<TruncationNote>,
    /// Scalar summaries, recorded in the metadata file.
    pub summary: Vec<(String, f64)>,
    pub warnings: Vec<String>,
    /// What the dimensionless frequencies and times are measured in.
    pub reference: String,
}

pub struct Scenario {
    pub id: &'static str,
    pub description: &'static str,
    /// The physical result the data series reproduces.
    pub anchor: &'static str,
    pub schema: fn() -> Vec<ParamSpec>,
    pub run: fn(&Ctx) -> Result<Output>,
}

pub fn registry() -> &'static [Scenario] {
    scenarios::REGISTRY
}

pub fn find(id: &str) -> Result<&'static Scenario> {
    registry().iter().find(|s| s.id == id).ok_or_else(|| {
        let ids: Vec<_> = registry().iter().map(|s| s.id).collect();
        HarnessError::Config(format!("unknown scenario {id:?}; known: {}", ids.join(", ")))
    })
}

/// `(id, description, anchor)` for every registered scenario.
pub fn list_scenarios() -> Vec<(&'static str, &'static str, &'static str)> {
    registry().iter().map(|s| (s.id, s.description, s.anchor)).collect()
}

#[derive(Clone, Debug)]
pub struct RunArtifact {
    pub dir: PathBuf,
    pub tables: Vec<PathBuf>,
    pub metadata: PathBuf,
    pub output: Output,
    pub params: Params,
}

impl RunArtifact {
    /// First failing check, if any.
    pub fn breach(&self) -> Option<&Check> {
        self.output.checks.iter().find(|c| !c.passed)
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    tool_version: &'a str,
    scenario: &'a str,
    seed: u64,
    threads: Option<usize>,
    wall_time_s: f64,
    reference: &'a str,
    tables: Vec<String>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    run: RunMeta<'a>,
    params: toml::Table,
    truncation: toml::Table,
    summary: toml::Table,
    warnings: &'a [String],
    checks: &'a [Check],
    truncation_report: &'a [TruncationNote],
}

pub const DEFAULT_SEED: u64 = 0;

pub fn default_out_dir(id: &str) -> PathBuf {
    Path::new("qdyn-out").join(id)
}

/// Resolve the configuration, run the scenario and write its tables and
/// metadata. Returns the artifact even when a check failed; the caller maps
/// [`RunArtifact::breach`] to an exit status.
pub fn run_scenario(id: &str, cfg: &ScenarioConfig) -> Result<RunArtifact> {
    let sc = find(id)?;
    if let Some(named) = &cfg.scenario {
        if named != id {
            return Err(HarnessError::Config(format!(
                "config names scenario {named:?} but {id:?} was requested"
            )));
        }
    }
    if cfg.threads == Some(0) {
        return Err(HarnessError::Config("threads must be at least 1".into()));
    }
    let schema = (sc.schema)();
    let params = cfg.resolve(&schema)?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let dir = cfg.out.clone().unwrap_or_else(|| default_out_dir(id));

    let start = Instant::now();
    let ctx = Ctx { params: &params, seed };
    let output = qdyn_core::par::with_threads(cfg.threads, || (sc.run)(&ctx))?;
    let wall = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&dir)?;
    let mut header = vec![
        format!("qdyn {TOOL_VERSION}"),
        format!("scenario: {id}"),
        format!("seed: {seed}"),
        format!("units: {}", output.reference),
    ];
    for (k, v) in params.iter() {
        header.push(format!("param {k} = {v}"));
    }
    let mut tables = Vec::new();
    for t in &output.tables {
        let path = dir.join(format!("{}.csv", t.name));
        let mut meta = header.clone();
        meta.push(format!("table: {}", t.name));
        let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        t.write_csv(file, &meta)?;
        tables.push(path);
    }

    let mut ptab = toml::Table::new();
    let mut ttab = toml::Table::new();
    for (k, v) in params.iter() {
        let trunc = schema.iter().any(|s| s.name == k && s.truncation);
        if trunc { &mut ttab } else { &mut ptab }.insert(k.clone(), v.to_toml());
    }
    let summary = output
        .summary
        .iter()
        .map(|(k, v)| (k.clone(), toml::Value::Float(*v)))
        .collect();
    let meta = Metadata {
        run: RunMeta {
            tool_version: TOOL_VERSION,
            scenario: id,
            seed,
            threads: cfg.threads,
            wall_time_s: wall,
            reference: &output.reference,
            tables: output.tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
        },
        params: ptab,
        truncation: ttab,
        summary,
        warnings: &output.warnings,
        checks: &output.checks,
        truncation_report: &output.truncation,
    };
    let metadata = dir.join("metadata.toml");
    let text = toml::to_string(&meta).map_err(|e| HarnessError::Numeric(format!("metadata serialization: {e}")))?;
    std::fs::write(&metadata, text)?;

    Ok(RunArtifact {
        dir,
        tables,
        metadata,
        output,
        params,
    })
}
