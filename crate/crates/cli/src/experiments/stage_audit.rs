use anyhow::Result;
use rank1_core::flow::{criterion_term, finiteness_test, Finiteness};
use rank1_core::{Scalar, Schedule};
use serde::{Deserialize, Serialize};

use crate::report::{Check, PlotData, Relation};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Stages to audit; defaults to the schedule depth.
    #[serde(default)]
    pub stages: Option<usize>,
    /// Horizon of the finiteness test; defaults to `stages`.
    #[serde(default)]
    pub horizon: Option<usize>,
    /// Partial sums above this count as divergence.
    #[serde(default = "default_budget")]
    pub budget: Scalar,
}

fn default_budget() -> Scalar {
    Scalar::int(1000)
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRow {
    pub n: usize,
    pub r: u64,
    pub height: Scalar,
    pub width: Scalar,
    pub measure: Scalar,
    pub bottom_spacer: Scalar,
    pub total_spacer: Scalar,
    pub criterion_term: Scalar,
    pub periodic: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Tower {
    pub n: usize,
    pub height: Scalar,
    pub width: Scalar,
    pub measure: Scalar,
}

#[derive(Clone, Debug, Serialize)]
pub struct Results {
    pub stages: Vec<StageRow>,
    /// `X_1` through the tower built by the last audited stage.
    pub towers: Vec<Tower>,
    pub violations: Vec<String>,
    pub finiteness: Finiteness,
}

/// Re-derives every offset, height, width and measure from the spacers and
/// compares exactly.
fn audit(schedule: &Schedule, stages: usize) -> Result<(Vec<StageRow>, Vec<String>)> {
    let mut rows = Vec::with_capacity(stages);
    let mut bad = Vec::new();
    let mut height = schedule.base_height().clone();
    let mut width = schedule.base_width().clone();
    let mut measure = &height * &width;
    for n in 1..=stages {
        let st = schedule.stage(n)?;
        if st.height != height || st.width != width {
            bad.push(format!("stage {n}: height or width disagrees with the recurrence"));
        }
        if schedule.tower_measure(n)? != measure {
            bad.push(format!("stage {n}: measure {} != {}", schedule.tower_measure(n)?, measure));
        }
        let r = st.r();
        if st.offsets.len() as u64 != r || st.spacers.len() as u64 != r {
            bad.push(format!("stage {n}: expected {r} offsets and spacers"));
        }
        let mut o = st.bottom_spacer.clone();
        for (j, off) in st.offsets.iter().enumerate() {
            if *off != o {
                bad.push(format!("stage {n}: offset {} is {off}, expected {o}", j + 1));
            }
            if st.spacers[j].signum() < 0 {
                bad.push(format!("stage {n}: negative spacer at {}", j + 1));
            }
            o = &(&o + &st.height) + &st.spacers[j];
        }
        let total = st.spacers.iter().fold(st.bottom_spacer.clone(), |a, s| &a + s);
        if o != st.next_height || total != st.total_spacer() {
            bad.push(format!("stage {n}: next height {} != {o}", st.next_height));
        }
        let rs = Scalar::int(r as i64);
        if &st.next_width * &rs != st.width {
            bad.push(format!("stage {n}: width is not divided by r"));
        }
        let next_measure = &measure + &(&total * &st.next_width);
        if &st.next_height * &st.next_width != next_measure {
            bad.push(format!("stage {n}: measure does not grow by the spacer mass"));
        }
        rows.push(StageRow {
            n,
            r,
            height: st.height.clone(),
            width: st.width.clone(),
            measure: measure.clone(),
            bottom_spacer: st.bottom_spacer.clone(),
            total_spacer: total,
            criterion_term: criterion_term(schedule, n)?,
            periodic: st.period.is_some(),
        });
        height = st.next_height.clone();
        width = st.next_width.clone();
        measure = next_measure;
    }
    Ok((rows, bad))
}

pub fn run(schedule: &Schedule, p: &Params) -> Result<(Results, Vec<Check>, PlotData)> {
    let stages = p.stages.unwrap_or(schedule.depth()).min(schedule.depth());
    let (rows, violations) = audit(schedule, stages)?;
    let horizon = p.horizon.unwrap_or(stages).max(1);
    let finiteness = finiteness_test(schedule, horizon, &p.budget)?;
    let mut plot = PlotData::new(
        "n: stage; height: h_n; measure: tower measure h_n w_n; partial_sum: criterion partial sum through n",
        &["n", "height", "measure", "partial_sum"],
    );
    let mut acc = Scalar::zero();
    for row in &rows {
        acc = &acc + &row.criterion_term;
        plot.rows.push(vec![row.n as f64, row.height.to_f64(), row.measure.to_f64(), acc.to_f64()]);
    }
    let checks = vec![Check::new("invariant violations", violations.len() as f64, Relation::AtMost, 0.0)];
    let towers = (1..=stages + 1)
        .map(|n| {
            Ok(Tower { n, height: schedule.height(n)?, width: schedule.width(n)?, measure: schedule.tower_measure(n)? })
        })
        .collect::<Result<_>>()?;
    Ok((Results { stages: rows, towers, violations, finiteness }, checks, plot))
}
