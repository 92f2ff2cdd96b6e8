use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rank1_core::{Schedule, ScheduleDoc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::spec::{ExperimentKind, ExperimentSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Below,
    AtLeast,
    AtMost,
}

/// One thresholded quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    /// Rigorous error bound on `value`, where one exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        let pass = match relation {
            Relation::Below => value < threshold,
            Relation::AtLeast => value >= threshold,
            Relation::AtMost => value <= threshold,
        };
        Check { name: name.into(), value, relation, threshold, bound: None, pass }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn line(&self) -> String {
        let rel = match self.relation {
            Relation::Below => "<",
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
        };
        let bound = self.bound.map(|b| format!(" (bound {b:.3e})")).unwrap_or_default();
        let verdict = if self.pass { "pass" } else { "FAIL" };
        format!("{verdict}  {}: {:.6e} {rel} {:.3e}{bound}", self.name, self.value, self.threshold)
    }
}

/// Sequence-valued data for external plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    /// What each column holds; written as the file's header comment.
    pub description: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PlotData {
    pub fn new(description: impl Into<String>, columns: &[&str]) -> Self {
        PlotData {
            description: description.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSummary {
    pub kind: String,
    pub depth: usize,
    pub mode: String,
    pub document: ScheduleDoc,
}

impl ScheduleSummary {
    pub fn of(schedule: &Schedule) -> Self {
        let mode =
            serde_json::to_value(schedule.mode()).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        ScheduleSummary {
            kind: schedule.named_spec().map_or("explicit", |n| n.kind()).to_string(),
            depth: schedule.depth(),
            mode,
            document: schedule.to_doc(),
        }
    }
}

/// Everything a run produces except timing, which lives in a separate file
/// so reports stay byte-identical across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub params: Value,
    pub schedule: ScheduleSummary,
    pub results: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotData>,
}

impl Report {
    pub fn new(
        spec: &ExperimentSpec,
        schedule: &Schedule,
        results: Value,
        checks: Vec<Check>,
        plot: Option<PlotData>,
    ) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Report {
            schema_version: SCHEMA_VERSION,
            tool_version: concat!("rank1 ", env!("CARGO_PKG_VERSION")).to_string(),
            experiment: spec.kind,
            seed: spec.seed,
            params: spec.params.clone(),
            schedule: ScheduleSummary::of(schedule),
            results,
            checks,
            pass,
            plot,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).context("report does not serialize")?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes the report's plot data as CSV: a `#` comment naming the columns,
/// a header row, then one row per index. A report without plot data gives
/// an error.
pub fn export_plotdata(report: &Report, path: &Path) -> Result<()> {
    let plot = report.plot.as_ref().context("report has no sequence-valued result to plot")?;
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut out = BufWriter::new(file);
    for line in plot.description.lines() {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&plot.columns)?;
    for row in &plot.rows {
        w.write_record(row.iter().map(|x| format!("{x:e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_relations() {
        assert!(Check::new("a", 0.01, Relation::Below, 0.05).pass);
        assert!(!Check::new("a", 0.05, Relation::Below, 0.05).pass);
        assert!(Check::new("a", 0.2, Relation::AtLeast, 0.19).pass);
        assert!(Check::new("a", 0.1, Relation::AtMost, 0.1).pass);
    }
}
