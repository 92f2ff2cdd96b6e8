use anyhow::{bail, Result};
use rand_chacha::ChaCha8Rng;
use rank1_core::koopman::{m_correlate_family, select_stage, CorrelateOptions, StepFunction};
use rank1_core::{Error, Scalar, Schedule};
use serde::{Deserialize, Serialize};

use crate::family::{build_family, FamilySpec, FunctionSpec};
use crate::report::{Check, PlotData, Relation};
use crate::times::{StageGroup, StageSel};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Level sets `A` for the forward liminf.
    pub sets: FamilySpec,
    /// Candidates `A'` for the backward witness; defaults to every single
    /// level of the stage the sets live on.
    #[serde(default)]
    pub witnesses: Option<FamilySpec>,
    #[serde(default)]
    pub stages: Option<StageSel>,
    #[serde(default = "default_forward")]
    pub forward_threshold: f64,
    #[serde(default = "default_backward")]
    pub backward_threshold: f64,
    #[serde(default = "default_min_sets")]
    pub min_sets: usize,
    #[serde(default)]
    pub extra_stages: usize,
}

fn default_forward() -> f64 {
    0.19
}

fn default_backward() -> f64 {
    0.1
}

fn default_min_sets() -> usize {
    5
}

#[derive(Clone, Debug, Serialize)]
pub struct Ratio {
    pub index: usize,
    /// `μ(A ∩ T_{±n}A ∩ T_{±3n}A) / μ(A)`.
    pub ratio: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageResult {
    pub stage: usize,
    /// `n_i = h_{l_i} + 1`.
    pub n: Scalar,
    pub stage_used: usize,
    pub forward: Vec<Ratio>,
    pub backward: Vec<Ratio>,
    pub min_forward: f64,
    pub witness: Ratio,
}

#[derive(Clone, Debug, Serialize)]
pub struct Results {
    pub sets: Vec<StepFunction>,
    pub witness_candidates: usize,
    pub skipped_stages: Vec<usize>,
    pub stages: Vec<StageResult>,
    /// The best backward witness at the deepest stage.
    pub best_witness: StepFunction,
}

fn ratios(
    schedule: &Schedule,
    sets: &[StepFunction],
    masses: &[f64],
    times: &[Scalar],
    opts: &CorrelateOptions,
) -> Result<(Vec<Ratio>, usize)> {
    let tuples: Vec<Vec<StepFunction>> = sets.iter().map(|a| vec![a.clone(), a.clone(), a.clone()]).collect();
    let res = m_correlate_family(schedule, &tuples, times, opts)?;
    let stage = res.first().map_or(0, |r| r.stage_used);
    let out = res
        .iter()
        .zip(masses)
        .enumerate()
        .map(|(index, (r, m))| Ratio { index, ratio: r.value.re / m, bound: r.error_bound / m })
        .collect();
    Ok((out, stage))
}

fn masses(schedule: &Schedule, fs: &[StepFunction]) -> Result<Vec<f64>> {
    fs.iter()
        .map(|f| {
            let m = f.integral(schedule)?.re;
            if !(m > 0.0) {
                bail!("level sets must have positive measure");
            }
            Ok(m)
        })
        .collect()
}

pub fn run(schedule: &Schedule, p: &Params, rng: &mut ChaCha8Rng) -> Result<(Results, Vec<Check>, PlotData)> {
    let sets = build_family(&p.sets, schedule, rng)?;
    let k = sets.iter().map(|f| f.stage).max().unwrap_or(1);
    let witness_spec = p
        .witnesses
        .clone()
        .unwrap_or_else(|| FamilySpec::single(FunctionSpec::Singletons { stage: k, cells: None }, false));
    let witnesses = build_family(&witness_spec, schedule, rng)?;
    let (set_mass, wit_mass) = (masses(schedule, &sets)?, masses(schedule, &witnesses)?);
    let sel = p.stages.clone().unwrap_or(StageSel::Group(StageGroup::Asymmetric));
    let mut skipped = Vec::new();
    let mut stages = Vec::new();
    let mut best_witness = None;
    for l in sel.stages(schedule)? {
        if l <= k {
            skipped.push(l);
            continue;
        }
        let n = &schedule.height(l)? + &Scalar::one();
        let three = &Scalar::int(3) * &n;
        let opts =
            CorrelateOptions { min_stage: (p.extra_stages > 0).then(|| l + 1 + p.extra_stages), ..Default::default() };
        if let Err(Error::Range(_)) = select_stage(schedule, k, &three, &opts) {
            skipped.push(l);
            continue;
        }
        let fw_times = [Scalar::zero(), n.clone(), three.clone()];
        let bw_times = [Scalar::zero(), -n.clone(), -three.clone()];
        let (forward, stage_used) = ratios(schedule, &sets, &set_mass, &fw_times, &opts)?;
        let (backward, _) = ratios(schedule, &sets, &set_mass, &bw_times, &opts)?;
        let (cands, _) = ratios(schedule, &witnesses, &wit_mass, &bw_times, &opts)?;
        let witness = cands.into_iter().min_by(|a, b| a.ratio.total_cmp(&b.ratio)).expect("non-empty witness family");
        best_witness = Some(witnesses[witness.index].clone());
        let min_forward = forward.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        stages.push(StageResult { stage: l, n, stage_used, forward, backward, min_forward, witness });
    }
    let Some(last) = stages.last() else {
        bail!("no asymmetric stage is feasible at this depth");
    };
    let min_bound = last.forward.iter().map(|r| r.bound).fold(0.0, f64::max);
    let checks = vec![
        Check::new("level sets tested", sets.len() as f64, Relation::AtLeast, p.min_sets as f64),
        Check::new(
            format!("min forward ratio at stage {}", last.stage),
            last.min_forward,
            Relation::AtLeast,
            p.forward_threshold,
        )
        .with_bound(min_bound),
        Check::new(
            format!("best backward witness at stage {}", last.stage),
            last.witness.ratio,
            Relation::AtMost,
            p.backward_threshold,
        )
        .with_bound(last.witness.bound),
    ];
    let mut plot = PlotData::new(
        "stage: l_i; n: h_{l_i}+1; min_forward: smallest forward ratio; witness_backward: best backward ratio",
        &["stage", "n", "min_forward", "witness_backward"],
    );
    for s in &stages {
        plot.rows.push(vec![s.stage as f64, s.n.to_f64(), s.min_forward, s.witness.ratio]);
    }
    let results = Results {
        sets,
        witness_candidates: witnesses.len(),
        skipped_stages: skipped,
        stages,
        best_witness: best_witness.expect("set with the last stage"),
    };
    Ok((results, checks, plot))
}
