use anyhow::{bail, Result};
use rand_chacha::ChaCha8Rng;
use rank1_core::spectral::{affinity, dilate};
use rank1_core::{Scalar, Schedule};
use serde::{Deserialize, Serialize};

use super::spectrum::{density_plot, estimate, MemberSpectrum};
use crate::report::{Check, PlotData, Relation};

/// Probes `σ ⊥ σ_t` by the affinity between the aggregate spectral estimate
/// and its dilations. A small affinity is evidence, not proof.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub spectrum: super::spectrum::Params,
    #[serde(default = "default_dilations")]
    pub dilations: Vec<Scalar>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_dilations() -> Vec<Scalar> {
    vec![Scalar::int(2)]
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Clone, Debug, Serialize)]
pub struct Pair {
    pub t: Scalar,
    pub affinity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Results {
    pub members: Vec<MemberSpectrum>,
    pub pairs: Vec<Pair>,
}

pub fn run(schedule: &Schedule, p: &Params, rng: &mut ChaCha8Rng) -> Result<(Results, Vec<Check>, PlotData)> {
    if p.dilations.is_empty() {
        bail!("no dilations given");
    }
    let s = estimate(schedule, &p.spectrum, rng)?;
    let mut pairs = Vec::new();
    for t in &p.dilations {
        let d = dilate(&s.aggregate, t)?;
        pairs.push(Pair { t: t.clone(), affinity: affinity(&s.aggregate, &d)? });
    }
    let worst = pairs.iter().map(|x| x.affinity).fold(0.0, f64::max);
    let checks = vec![Check::new("max affinity with a dilation", worst, Relation::Below, p.threshold)];
    Ok((Results { members: s.members, pairs }, checks, density_plot(&s.aggregate)))
}
