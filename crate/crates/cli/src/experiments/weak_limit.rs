use anyhow::{bail, Result};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rank1_core::koopman::{
    select_stage, weak_limit_probe, CorrelateOptions, StepFunction, WeakLimitReport, WeakLimitTarget,
};
use rank1_core::{Scalar, Schedule};
use serde::{Deserialize, Serialize};

use crate::family::{build_family, FamilySpec};
use crate::report::{Check, PlotData, Relation};
use crate::times::TimeSeq;

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairs {
    /// Every ordered pair `(f_i, f_j)`.
    #[default]
    All,
    Diagonal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassRule {
    /// The last term must be below the threshold.
    #[default]
    Final,
    /// Every term must be below the threshold (a sup over the sequence).
    Max,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub shift: Option<Scalar>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub family: FamilySpec,
    #[serde(default)]
    pub pairs: Pairs,
    pub times: TimeSeq,
    pub target: TargetSpec,
    pub threshold: f64,
    #[serde(default)]
    pub rule: PassRule,
    /// Evaluate stage-derived times this many stages deeper than needed,
    /// which shrinks the error bounds.
    #[serde(default)]
    pub extra_stages: usize,
    /// Drop times whose tower would exceed the schedule depth instead of
    /// failing.
    #[serde(default)]
    pub skip_infeasible: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Results {
    pub family_size: usize,
    pub skipped: Vec<Scalar>,
    pub probe: WeakLimitReport,
}

pub fn run(schedule: &Schedule, p: &Params, rng: &mut ChaCha8Rng) -> Result<(Results, Vec<Check>, PlotData)> {
    if !(p.threshold > 0.0) {
        bail!("threshold must be positive");
    }
    let fam = build_family(&p.family, schedule, rng)?;
    let pairs: Vec<(StepFunction, StepFunction)> = match p.pairs {
        Pairs::Diagonal => fam.iter().map(|f| (f.clone(), f.clone())).collect(),
        Pairs::All => fam.iter().flat_map(|f| fam.iter().map(move |g| (f.clone(), g.clone()))).collect(),
    };
    let target = WeakLimitTarget {
        alpha: Complex64::new(p.target.alpha, 0.0),
        beta: Complex64::new(p.target.beta, 0.0),
        shift: p.target.shift.clone().unwrap_or_else(Scalar::zero),
    };
    let opts = CorrelateOptions::default();
    let k = fam.iter().map(|f| f.stage).max().unwrap_or(1);
    let mut probes = Vec::new();
    let mut skipped = Vec::new();
    for st in p.times.times(schedule)? {
        let pt = st.probe(p.extra_stages);
        if p.skip_infeasible {
            let o = CorrelateOptions { min_stage: pt.min_stage, ..opts.clone() };
            if let Err(rank1_core::Error::Range(_)) = select_stage(schedule, k, &pt.t.abs(), &o) {
                skipped.push(pt.t);
                continue;
            }
        }
        probes.push(pt);
    }
    if probes.is_empty() {
        bail!("no feasible times in the sequence");
    }
    let probe = weak_limit_probe(schedule, &probes, &target, &pairs, Some(p.threshold), &opts)?;
    let mut plot = PlotData::new(
        "j: index; t_j: time; residual: max family residual against the target; bound: rigorous error bound",
        &["j", "t_j", "residual", "bound"],
    );
    for t in &probe.terms {
        plot.rows.push(vec![t.j as f64, t.t.to_f64(), t.residual, t.bound]);
    }
    let checks = match p.rule {
        PassRule::Final => {
            let last = probe.terms.last().expect("non-empty probe");
            vec![Check::new("final residual", last.residual, Relation::Below, p.threshold).with_bound(last.bound)]
        }
        PassRule::Max => {
            let worst = probe.terms.iter().max_by(|a, b| a.residual.total_cmp(&b.residual)).expect("non-empty probe");
            vec![Check::new("sup residual", worst.residual, Relation::Below, p.threshold).with_bound(worst.bound)]
        }
    };
    Ok((Results { family_size: fam.len(), skipped, probe }, checks, plot))
}
