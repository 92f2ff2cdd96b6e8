use anyhow::{bail, Result};
use rand_chacha::ChaCha8Rng;
use rank1_core::koopman::CorrelateOptions;
use rank1_core::spectral::{aggregate, autocorr_curve_with, bochner_density};
use rank1_core::{Scalar, Schedule, SpectralEstimate};
use serde::{Deserialize, Serialize};

use crate::family::{build_family, FamilySpec};
use crate::report::{Check, PlotData, Relation};

/// Allowed relative gap between an estimate's mass and `c(0)`.
const MASS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub family: FamilySpec,
    pub dt: Scalar,
    pub t_max: Scalar,
    pub lambda_max: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Gaussian taper width; defaults to `T_max / 3`.
    #[serde(default)]
    pub taper_width: Option<f64>,
    #[serde(default)]
    pub extra_stages: usize,
}

fn default_grid() -> usize {
    401
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberSpectrum {
    pub index: usize,
    pub c0: f64,
    pub mass: f64,
    /// Largest error bound among the sampled correlations.
    pub max_curve_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Results {
    pub members: Vec<MemberSpectrum>,
    pub taper_width: f64,
    pub aggregate: SpectralEstimate,
}

pub(crate) struct Spectra {
    pub members: Vec<MemberSpectrum>,
    pub taper_width: f64,
    pub aggregate: SpectralEstimate,
}

pub(crate) fn estimate(schedule: &Schedule, p: &Params, rng: &mut ChaCha8Rng) -> Result<Spectra> {
    let fam = build_family(&p.family, schedule, rng)?;
    let width = p.taper_width.unwrap_or(p.t_max.to_f64() / 3.0);
    let k = fam.iter().map(|f| f.stage).max().unwrap_or(1);
    let opts =
        CorrelateOptions { min_stage: (p.extra_stages > 0).then(|| k + 1 + p.extra_stages), ..Default::default() };
    let mut members = Vec::new();
    let mut ests = Vec::new();
    for (index, f) in fam.iter().enumerate() {
        let curve = autocorr_curve_with(schedule, f, &p.dt, &p.t_max, &opts)?;
        let est = bochner_density(&curve, p.lambda_max, p.grid, width)?;
        members.push(MemberSpectrum {
            index,
            c0: curve.at_zero().re,
            mass: est.mass,
            max_curve_bound: curve.bounds.iter().copied().fold(0.0, f64::max),
        });
        ests.push(est);
    }
    Ok(Spectra { members, taper_width: width, aggregate: aggregate(&ests)? })
}

pub(crate) fn density_plot(est: &SpectralEstimate) -> PlotData {
    let mut plot = PlotData::new("lambda: frequency; density: aggregate spectral density", &["lambda", "density"]);
    plot.rows.extend(est.points().map(|(l, d)| vec![l, d]));
    plot
}

pub fn run(schedule: &Schedule, p: &Params, rng: &mut ChaCha8Rng) -> Result<(Results, Vec<Check>, PlotData)> {
    if p.t_max.signum() <= 0 {
        bail!("t_max must be positive");
    }
    let s = estimate(schedule, p, rng)?;
    let worst = s.members.iter().map(|m| (m.mass - m.c0).abs() / m.c0.abs().max(1.0)).fold(0.0, f64::max);
    let checks = vec![Check::new("max relative mass error", worst, Relation::AtMost, MASS_TOL)];
    let plot = density_plot(&s.aggregate);
    Ok((Results { members: s.members, taper_width: s.taper_width, aggregate: s.aggregate }, checks, plot))
}
