use anyhow::{bail, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rank1_core::koopman::{correlate_with, m_correlate_with, reflect, CorrelateOptions, StepFunction};
use rank1_core::{Scalar, Schedule};
use serde::{Deserialize, Serialize};

use super::cplx;
use crate::family::default_cells;
use crate::report::{Check, PlotData, Relation};

/// Time resolution: random times are multiples of `h_k / DENOM`.
const DENOM: i64 = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    /// Every case satisfies the identity within its bound.
    #[default]
    Holds,
    /// Some case misses it by more than ten times its bound.
    Fails,
}

/// Tests `⟨U(t)f, g⟩ = ⟨U(-t)Rf, Rg⟩` with `R` the level reflection, on
/// random step functions and times. With `points = 3` the triple version
/// `∫ f_1 · f_2∘T_{-t_1} · f_3∘T_{-t_2}` is compared with the reflected
/// functions at `-t_1, -t_2`. Two-point correlations cannot tell a flow
/// from its inverse (copy displacements come in `±d` pairs), so only the
/// triple version separates asymmetric schedules.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default = "default_cases")]
    pub cases: usize,
    #[serde(default = "default_stage")]
    pub stage: usize,
    #[serde(default)]
    pub cells: Option<u64>,
    /// Times are drawn from `[-span·h_k, span·h_k]`.
    #[serde(default = "default_span")]
    pub span: i64,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub extra_stages: usize,
}

fn default_cases() -> usize {
    50
}

fn default_stage() -> usize {
    2
}

fn default_span() -> i64 {
    2
}

fn default_points() -> usize {
    2
}

#[derive(Clone, Debug, Serialize)]
pub struct Case {
    pub t: Scalar,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2: Option<Scalar>,
    pub direct: [f64; 2],
    pub reflected: [f64; 2],
    pub residual: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Results {
    pub symmetric_schedule: bool,
    pub within_bound: usize,
    pub beyond_ten_bounds: usize,
    pub cases: Vec<Case>,
}

fn random_function(schedule: &Schedule, stage: usize, cells: u64, rng: &mut ChaCha8Rng) -> Result<StepFunction> {
    let h = schedule.height(stage)?;
    let grid = (0..=cells).map(|i| &h * &Scalar::ratio(i as i64, cells as i64)).collect();
    let values = (0..cells).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    Ok(StepFunction::new(stage, grid, values)?)
}

pub fn run(schedule: &Schedule, p: &Params, rng: &mut ChaCha8Rng) -> Result<(Results, Vec<Check>, PlotData)> {
    if p.cases == 0 || p.span <= 0 {
        bail!("cases and span must be positive");
    }
    if p.points != 2 && p.points != 3 {
        bail!("points must be 2 or 3, got {}", p.points);
    }
    let cells = match p.cells {
        Some(c) if c > 0 => c,
        Some(_) => bail!("cells must be positive"),
        None => default_cells(schedule, p.stage)?,
    };
    let h = schedule.height(p.stage)?;
    let opts = CorrelateOptions {
        min_stage: (p.extra_stages > 0).then(|| p.stage + 1 + p.extra_stages),
        ..Default::default()
    };
    let time = |rng: &mut ChaCha8Rng| &h * &Scalar::ratio(rng.gen_range(-p.span * DENOM..=p.span * DENOM), DENOM);
    let mut cases = Vec::with_capacity(p.cases);
    for _ in 0..p.cases {
        let case = if p.points == 2 {
            let f = random_function(schedule, p.stage, cells, rng)?;
            let g = random_function(schedule, p.stage, cells, rng)?;
            let t = time(rng);
            let a = correlate_with(schedule, &f, &g, &t, &opts)?;
            let b = correlate_with(schedule, &reflect(&f), &reflect(&g), &-t.clone(), &opts)?;
            Case {
                t,
                t2: None,
                direct: cplx(a.value),
                reflected: cplx(b.value),
                residual: (a.value - b.value).norm(),
                bound: a.error_bound + b.error_bound,
            }
        } else {
            let fs = (0..3).map(|_| random_function(schedule, p.stage, cells, rng)).collect::<Result<Vec<_>>>()?;
            let rs: Vec<StepFunction> = fs.iter().map(reflect).collect();
            let (t, t2) = (time(rng), time(rng));
            let a = m_correlate_with(schedule, &fs, &[Scalar::zero(), t.clone(), t2.clone()], &opts)?;
            let b = m_correlate_with(schedule, &rs, &[Scalar::zero(), -t.clone(), -t2.clone()], &opts)?;
            Case {
                t,
                t2: Some(t2),
                direct: cplx(a.value),
                reflected: cplx(b.value),
                residual: (a.value - b.value).norm(),
                bound: a.error_bound + b.error_bound,
            }
        };
        cases.push(case);
    }
    let within_bound = cases.iter().filter(|c| c.residual <= c.bound + 1e-12).count();
    let beyond_ten_bounds = cases.iter().filter(|c| c.residual > 10.0 * c.bound + 1e-12).count();
    let checks = match p.expect {
        Expect::Holds => {
            vec![Check::new("cases violating the identity", (cases.len() - within_bound) as f64, Relation::AtMost, 0.0)]
        }
        Expect::Fails => {
            vec![Check::new("cases beyond ten bounds", beyond_ten_bounds as f64, Relation::AtLeast, 1.0)]
        }
    };
    let mut plot = PlotData::new(
        "case: index; t: time; residual: |direct - reflected|; bound: summed error bounds",
        &["case", "t", "residual", "bound"],
    );
    for (i, c) in cases.iter().enumerate() {
        plot.rows.push(vec![i as f64, c.t.to_f64(), c.residual, c.bound]);
    }
    let results = Results { symmetric_schedule: schedule.is_symmetric(), within_bound, beyond_ten_bounds, cases };
    Ok((results, checks, plot))
}
