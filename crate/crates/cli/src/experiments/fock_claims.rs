use anyhow::{bail, Result};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rank1_core::flow::Thm44Class;
use rank1_core::koopman::{
    component_correlate_with, correlate_with, inner_product, select_stage, CorrelateOptions, CorrelationResult,
    FockComponent,
};
use rank1_core::{Error, Scalar, Schedule};
use serde::{Deserialize, Serialize};

use super::cplx;
use crate::family::{build_family, FamilySpec};
use crate::report::{Check, PlotData, Relation};
use crate::times::{thm44_params, ClassSpec};

/// Checks the M-stage limits on a thm44 schedule: along the class's pair
/// times `t_j`, `U(s_l t_j) → I/2k` for `l ≠ l0`, `U(s_l0 t_j) → U(s_l0)/2k`,
/// and `U(b t_j) → 0` for `b` outside the scale set.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub tuple: Vec<Scalar>,
    /// 1-based index of the distinguished scale.
    pub l0: usize,
    /// The test vector; only the first member is used.
    pub function: FamilySpec,
    /// Powers `n_l` of the Fock component; all 1 by default.
    #[serde(default)]
    pub multiplicities: Option<Vec<u32>>,
    #[serde(default = "default_b")]
    pub probe_b: Scalar,
    #[serde(default = "default_factor")]
    pub factor_threshold: f64,
    #[serde(default = "default_probe")]
    pub probe_threshold: f64,
    #[serde(default)]
    pub extra_stages: usize,
}

fn default_b() -> Scalar {
    Scalar::int(3)
}

fn default_factor() -> f64 {
    0.1
}

fn default_probe() -> f64 {
    0.05
}

#[derive(Clone, Debug, Serialize)]
pub struct Factor {
    pub scale: Scalar,
    pub value: [f64; 2],
    pub predicted: [f64; 2],
    pub residual: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Term {
    pub j: usize,
    pub stage: usize,
    pub t: Scalar,
    pub stage_used: usize,
    pub factors: Vec<Factor>,
    pub max_factor_residual: f64,
    pub component: [f64; 2],
    pub component_predicted: [f64; 2],
    pub component_residual: f64,
    pub component_bound: f64,
    pub probe: [f64; 2],
    pub probe_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Results {
    pub class: String,
    pub multiplicities: Vec<u32>,
    pub norm_sq: f64,
    pub skipped_stages: Vec<usize>,
    pub terms: Vec<Term>,
}

fn residual(c: &CorrelationResult, pred: &CorrelationResult) -> (f64, f64) {
    ((c.value - pred.value).norm(), c.error_bound + pred.error_bound)
}

pub fn run(schedule: &Schedule, p: &Params, rng: &mut ChaCha8Rng) -> Result<(Results, Vec<Check>, PlotData)> {
    let params = thm44_params(schedule)?;
    let class = ClassSpec::M { tuple: p.tuple.clone(), l0: p.l0 }.resolve(params)?;
    let Thm44Class::M { tuple: idx, l0 } = &class else { unreachable!("resolved from an M class") };
    let mut sorted = params.scales.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let scales: Vec<Scalar> = idx.iter().map(|&i| sorted[i].clone()).collect();
    if scales.contains(&p.probe_b) {
        bail!("probe_b = {} must lie outside the scale set", p.probe_b);
    }
    let k = scales.len();
    let mult = p.multiplicities.clone().unwrap_or_else(|| vec![1; k]);
    let f = build_family(&p.function, schedule, rng)?.remove(0);
    let component = FockComponent::new(scales.clone(), mult.clone(), vec![f.clone(); k])?;

    let inv = Complex64::new(1.0 / (2 * k) as f64, 0.0);
    let norm_sq = inner_product(schedule, &f, &f)?;
    let at_l0 = correlate_with(schedule, &f, &f, &scales[l0 - 1], &CorrelateOptions::default())?;
    let predicted: Vec<CorrelationResult> = (0..k)
        .map(|l| {
            if l + 1 == *l0 {
                CorrelationResult {
                    value: at_l0.value * inv,
                    error_bound: at_l0.error_bound * inv.re,
                    stage_used: at_l0.stage_used,
                }
            } else {
                CorrelationResult::exact(norm_sq * inv, 0)
            }
        })
        .collect();
    let mut comp_pred = Complex64::new(1.0, 0.0);
    let mut comp_pred_bound = 1.0;
    let mut comp_centre = 1.0;
    for (pr, &n) in predicted.iter().zip(&mult) {
        for _ in 0..n {
            comp_pred *= pr.value;
            comp_pred_bound *= pr.value.norm() + pr.error_bound;
            comp_centre *= pr.value.norm();
        }
    }
    let comp_pred_bound = (comp_pred_bound - comp_centre).max(0.0);

    let s_max = scales.last().expect("non-empty tuple").max(&p.probe_b);
    let mut terms = Vec::new();
    let mut skipped = Vec::new();
    for (j, n) in params.stages_of(&class).into_iter().enumerate() {
        let t = params.pair_time(idx, params.slot(n).occurrence, &schedule.height(n)?);
        let opts =
            CorrelateOptions { min_stage: (p.extra_stages > 0).then(|| n + 1 + p.extra_stages), ..Default::default() };
        if let Err(Error::Range(_)) = select_stage(schedule, f.stage, &(&s_max * &t), &opts) {
            skipped.push(n);
            continue;
        }
        let mut factors = Vec::with_capacity(k);
        let mut stage_used = 0;
        for (s, pr) in scales.iter().zip(&predicted) {
            let c = correlate_with(schedule, &f, &f, &(s * &t), &opts)?;
            let (res, bound) = residual(&c, pr);
            stage_used = stage_used.max(c.stage_used);
            factors.push(Factor {
                scale: s.clone(),
                value: cplx(c.value),
                predicted: cplx(pr.value),
                residual: res,
                bound,
            });
        }
        let comp = component_correlate_with(schedule, &component, &t, &opts)?;
        let probe = correlate_with(schedule, &f, &f, &(&p.probe_b * &t), &opts)?;
        let max_factor_residual = factors.iter().map(|x| x.residual).fold(0.0, f64::max);
        terms.push(Term {
            j: j + 1,
            stage: n,
            t,
            stage_used,
            factors,
            max_factor_residual,
            component: cplx(comp.value),
            component_predicted: cplx(comp_pred),
            component_residual: (comp.value - comp_pred).norm(),
            component_bound: comp.error_bound + comp_pred_bound,
            probe: cplx(probe.value),
            probe_bound: probe.error_bound,
        });
    }
    let Some(last) = terms.last() else {
        bail!("no stage of class {} is feasible at this depth", class.label(&sorted));
    };
    let factor_bound = last.factors.iter().map(|x| x.bound).fold(0.0, f64::max);
    let checks = vec![
        Check::new(
            format!("max factor residual at j = {}", last.j),
            last.max_factor_residual,
            Relation::Below,
            p.factor_threshold,
        )
        .with_bound(factor_bound),
        Check::new(
            format!("|probe at b = {}| at j = {}", p.probe_b, last.j),
            probe_abs(last),
            Relation::Below,
            p.probe_threshold,
        )
        .with_bound(last.probe_bound),
    ];
    let mut plot = PlotData::new(
        "j: index; t_j: pair time; factor_residual: max per-factor residual; component_residual: residual of the component; probe: |correlation at b t_j|",
        &["j", "t_j", "factor_residual", "component_residual", "probe"],
    );
    for t in &terms {
        plot.rows.push(vec![t.j as f64, t.t.to_f64(), t.max_factor_residual, t.component_residual, probe_abs(t)]);
    }
    let results = Results {
        class: class.label(&sorted),
        multiplicities: mult,
        norm_sq: norm_sq.re,
        skipped_stages: skipped,
        terms,
    };
    Ok((results, checks, plot))
}

fn probe_abs(t: &Term) -> f64 {
    t.probe[0].hypot(t.probe[1])
}
