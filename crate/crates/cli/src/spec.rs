//! Experiment specs: one JSON document per run.
//!
//! ```json
//! {
//!   "kind": "weak-limit",
//!   "schedule": {"named": {"kind": "staircase34", "params": {"depth": 8}}},
//!   "seed": 0,
//!   "params": { ... }
//! }
//! ```
//!
//! `schedule` is either an inline schedule document or `{"file": "path"}`,
//! resolved against the directory of the spec file.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use rank1_core::{Schedule, ScheduleDoc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    StageAudit,
    Correlate,
    WeakLimit,
    TripleAsymmetry,
    FockClaims,
    Spectrum,
    Disjointness,
    ReflectionCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::StageAudit => "stage-audit",
            ExperimentKind::Correlate => "correlate",
            ExperimentKind::WeakLimit => "weak-limit",
            ExperimentKind::TripleAsymmetry => "triple-asymmetry",
            ExperimentKind::FockClaims => "fock-claims",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Disjointness => "disjointness",
            ExperimentKind::ReflectionCheck => "reflection-check",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Report file name inside the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    /// Plot-data CSV name; plot data is written whenever the report has any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    kind: Option<ExperimentKind>,
    schedule: Value,
    #[serde(default)]
    seed: u64,
    #[serde(default = "empty_object")]
    params: Value,
    #[serde(default)]
    output: OutputPaths,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

/// A validated spec. `params` is kept as JSON and decoded by the experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub schedule: ScheduleDoc,
    pub seed: u64,
    pub params: Value,
    pub output: OutputPaths,
}

impl ExperimentSpec {
    /// Parses a spec; `kind` may be omitted when the caller already knows it.
    pub fn parse(text: &str, kind: Option<ExperimentKind>, base: &Path) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(text).context("invalid experiment spec")?;
        let kind = match (raw.kind, kind) {
            (Some(a), Some(b)) if a != b => bail!("spec is a {a} experiment but was run as {b}"),
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => bail!("spec has no `kind` field"),
        };
        if !raw.params.is_object() {
            bail!("`params` must be a JSON object");
        }
        let schedule = resolve_schedule(raw.schedule, base)?;
        Ok(ExperimentSpec { kind, schedule, seed: raw.seed, params: raw.params, output: raw.output })
    }

    pub fn load(path: &Path, kind: Option<ExperimentKind>) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read spec {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, kind, &base).with_context(|| format!("in spec {}", path.display()))
    }

    pub fn build_schedule(&self) -> Result<Schedule> {
        Ok(self.schedule.build()?)
    }

    /// Decodes `params`, naming the offending field on failure.
    pub fn params<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        serde_json::from_value(self.params.clone()).with_context(|| format!("invalid params for {}", self.kind))
    }
}

fn resolve_schedule(v: Value, base: &Path) -> Result<ScheduleDoc> {
    if let Some(file) = v.get("file") {
        let Some(name) = file.as_str() else {
            bail!("schedule.file must be a path string");
        };
        if v.as_object().is_some_and(|o| o.len() > 1) {
            bail!("schedule.file cannot be combined with other schedule fields");
        }
        let path: PathBuf = base.join(name);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("schedule file {} does not exist or is unreadable", path.display()))?;
        return ScheduleDoc::from_json(&text).with_context(|| format!("in schedule file {}", path.display()));
    }
    serde_json::from_value(v).context("invalid schedule")
}
