use anyhow::{bail, Result};
use rand_chacha::ChaCha8Rng;
use rank1_core::koopman::{correlate_with, CorrelateOptions};
use rank1_core::{Scalar, Schedule};
use serde::{Deserialize, Serialize};

use super::cplx;
use crate::family::{build_family, FamilySpec};
use crate::report::{Check, PlotData};
use crate::times::TimeSeq;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub f: FamilySpec,
    /// Defaults to `f`.
    #[serde(default)]
    pub g: Option<FamilySpec>,
    pub times: TimeSeq,
    #[serde(default)]
    pub extra_stages: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Item {
    pub f: usize,
    pub g: usize,
    pub t: Scalar,
    pub value: [f64; 2],
    pub error_bound: f64,
    pub stage_used: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Results {
    pub items: Vec<Item>,
}

pub fn run(schedule: &Schedule, p: &Params, rng: &mut ChaCha8Rng) -> Result<(Results, Vec<Check>, PlotData)> {
    let fs = build_family(&p.f, schedule, rng)?;
    let gs = match &p.g {
        Some(g) => build_family(g, schedule, rng)?,
        None => fs.clone(),
    };
    let times = p.times.times(schedule)?;
    if times.is_empty() {
        bail!("no times to evaluate");
    }
    let mut items = Vec::new();
    let mut plot = PlotData::new(
        "index: item; t: time; re, im: correlation; bound: rigorous error bound",
        &["index", "t", "re", "im", "bound"],
    );
    for st in &times {
        let opts = CorrelateOptions { min_stage: st.probe(p.extra_stages).min_stage, ..Default::default() };
        for (i, f) in fs.iter().enumerate() {
            for (j, g) in gs.iter().enumerate() {
                let c = correlate_with(schedule, f, g, &st.t, &opts)?;
                plot.rows.push(vec![items.len() as f64, st.t.to_f64(), c.value.re, c.value.im, c.error_bound]);
                items.push(Item {
                    f: i,
                    g: j,
                    t: st.t.clone(),
                    value: cplx(c.value),
                    error_bound: c.error_bound,
                    stage_used: c.stage_used,
                });
            }
        }
    }
    Ok((Results { items }, Vec::new(), plot))
}
