//! One module per experiment kind. Each `run` returns its results, the
//! thresholded checks, and plot data; [`run`] assembles the report.

pub mod correlate;
pub mod disjointness;
pub mod fock_claims;
pub mod reflection_check;
pub mod spectrum;
pub mod stage_audit;
pub mod triple_asymmetry;
pub mod weak_limit;

use anyhow::{Context, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::report::{Check, PlotData, Report};
use crate::spec::{ExperimentKind, ExperimentSpec};

pub(crate) fn cplx(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn pack<R: Serialize>(out: (R, Vec<Check>, PlotData)) -> Result<(serde_json::Value, Vec<Check>, PlotData)> {
    let (r, checks, plot) = out;
    Ok((serde_json::to_value(r).context("results do not serialize")?, checks, plot))
}

/// Runs the experiment a spec describes. Errors are configuration or
/// resource failures; threshold failures are reported through `pass`.
pub fn run(spec: &ExperimentSpec) -> Result<Report> {
    let schedule = spec.build_schedule()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (results, checks, plot) = match spec.kind {
        ExperimentKind::StageAudit => pack(stage_audit::run(&schedule, &spec.params()?)?)?,
        ExperimentKind::Correlate => pack(correlate::run(&schedule, &spec.params()?, &mut rng)?)?,
        ExperimentKind::WeakLimit => pack(weak_limit::run(&schedule, &spec.params()?, &mut rng)?)?,
        ExperimentKind::TripleAsymmetry => pack(triple_asymmetry::run(&schedule, &spec.params()?, &mut rng)?)?,
        ExperimentKind::FockClaims => pack(fock_claims::run(&schedule, &spec.params()?, &mut rng)?)?,
        ExperimentKind::Spectrum => pack(spectrum::run(&schedule, &spec.params()?, &mut rng)?)?,
        ExperimentKind::Disjointness => pack(disjointness::run(&schedule, &spec.params()?, &mut rng)?)?,
        ExperimentKind::ReflectionCheck => pack(reflection_check::run(&schedule, &spec.params()?, &mut rng)?)?,
    };
    Ok(Report::new(spec, &schedule, results, checks, Some(plot)))
}
