//! Test-function families. Random members are level-set indicators (or
//! balanced sign patterns) drawn from one seeded generator in spec order.

use anyhow::{bail, Result};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rank1_core::koopman::StepFunction;
use rank1_core::{Scalar, Schedule};
use serde::{Deserialize, Serialize};

/// Cells used when a spec does not say: one per unit level when the tower
/// height is a small integer, otherwise 16.
pub fn default_cells(schedule: &Schedule, stage: usize) -> Result<u64> {
    let h = schedule.height(stage)?;
    let levels = h.to_f64().round();
    Ok(if (1.0..=4096.0).contains(&levels) && h == Scalar::int(levels as i64) { levels as u64 } else { 16 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum FunctionSpec {
    Explicit {
        function: StepFunction,
    },
    Constant {
        stage: usize,
        #[serde(default = "one")]
        value: f64,
    },
    Indicator {
        stage: usize,
        from: Scalar,
        to: Scalar,
    },
    /// Indicator of the listed cells of `[0, h_k)` cut into `cells` equal parts.
    LevelSet {
        stage: usize,
        #[serde(default)]
        cells: Option<u64>,
        members: Vec<u64>,
    },
    /// `count` indicators, each cell included with probability `density`
    /// (at least one cell is always included).
    RandomLevelSet {
        stage: usize,
        #[serde(default)]
        cells: Option<u64>,
        #[serde(default = "half")]
        density: f64,
        #[serde(default = "one_usize")]
        count: usize,
    },
    /// `count` mean-zero functions: `+1` on a random half of the cells and
    /// `-1` on the other half.
    RandomBalanced {
        stage: usize,
        #[serde(default)]
        cells: Option<u64>,
        #[serde(default = "one_usize")]
        count: usize,
    },
    /// Every single-cell indicator at the stage.
    Singletons {
        stage: usize,
        #[serde(default)]
        cells: Option<u64>,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub functions: Vec<FunctionSpec>,
    /// Rescale every member to unit `L²` norm.
    #[serde(default)]
    pub normalize: bool,
}

impl FamilySpec {
    pub fn single(f: FunctionSpec, normalize: bool) -> Self {
        FamilySpec { functions: vec![f], normalize }
    }
}

fn grid(schedule: &Schedule, stage: usize, cells: Option<u64>) -> Result<Vec<Scalar>> {
    let cells = match cells {
        Some(c) => c,
        None => default_cells(schedule, stage)?,
    };
    if cells == 0 {
        bail!("cells must be positive");
    }
    let h = schedule.height(stage)?;
    Ok((0..=cells).map(|i| &h * &Scalar::ratio(i as i64, cells as i64)).collect())
}

fn on_cells(stage: usize, grid: Vec<Scalar>, values: Vec<f64>) -> Result<StepFunction> {
    let values = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    Ok(StepFunction::new(stage, grid, values)?.merged())
}

impl FunctionSpec {
    pub fn build(&self, schedule: &Schedule, rng: &mut ChaCha8Rng) -> Result<Vec<StepFunction>> {
        let out = match self {
            FunctionSpec::Explicit { function } => {
                function.check(schedule)?;
                vec![function.clone()]
            }
            FunctionSpec::Constant { stage, value } => {
                vec![StepFunction::constant(schedule, *stage, Complex64::new(*value, 0.0))?]
            }
            FunctionSpec::Indicator { stage, from, to } => {
                vec![StepFunction::indicator(schedule, *stage, from.clone(), to.clone())?]
            }
            FunctionSpec::LevelSet { stage, cells, members } => {
                let g = grid(schedule, *stage, *cells)?;
                let n = g.len() - 1;
                if let Some(bad) = members.iter().find(|&&m| m as usize >= n) {
                    bail!("level-set member {bad} is outside the {n} cells");
                }
                let vals = (0..n as u64).map(|i| if members.contains(&i) { 1.0 } else { 0.0 }).collect();
                vec![on_cells(*stage, g, vals)?]
            }
            FunctionSpec::RandomLevelSet { stage, cells, density, count } => {
                if !(0.0..=1.0).contains(density) {
                    bail!("density must lie in [0, 1]");
                }
                let g = grid(schedule, *stage, *cells)?;
                let n = g.len() - 1;
                let mut out = Vec::with_capacity(*count);
                for _ in 0..*count {
                    let mut vals: Vec<f64> = (0..n).map(|_| if rng.gen_bool(*density) { 1.0 } else { 0.0 }).collect();
                    if vals.iter().all(|v| *v == 0.0) {
                        vals[rng.gen_range(0..n)] = 1.0;
                    }
                    out.push(on_cells(*stage, g.clone(), vals)?);
                }
                out
            }
            FunctionSpec::RandomBalanced { stage, cells, count } => {
                let g = grid(schedule, *stage, *cells)?;
                let n = g.len() - 1;
                if n % 2 != 0 {
                    bail!("random-balanced needs an even number of cells, got {n}");
                }
                let mut out = Vec::with_capacity(*count);
                for _ in 0..*count {
                    let mut vals: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect();
                    vals.shuffle(rng);
                    out.push(on_cells(*stage, g.clone(), vals)?);
                }
                out
            }
            FunctionSpec::Singletons { stage, cells } => {
                let g = grid(schedule, *stage, *cells)?;
                let n = g.len() - 1;
                (0..n)
                    .map(|i| on_cells(*stage, g.clone(), (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()))
                    .collect::<Result<_>>()?
            }
        };
        Ok(out)
    }
}

/// Materializes the family in order.
pub fn build_family(spec: &FamilySpec, schedule: &Schedule, rng: &mut ChaCha8Rng) -> Result<Vec<StepFunction>> {
    let mut out = Vec::new();
    for f in &spec.functions {
        out.extend(f.build(schedule, rng)?);
    }
    if out.is_empty() {
        bail!("the test family is empty");
    }
    if spec.normalize {
        out = out
            .into_iter()
            .map(|f| {
                let n = f.norm_sq(schedule)?.sqrt();
                if n == 0.0 {
                    bail!("cannot normalize a zero function");
                }
                Ok(f.scale(Complex64::new(1.0 / n, 0.0)))
            })
            .collect::<Result<_>>()?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rank1_core::NamedSchedule;

    #[test]
    fn balanced_functions_have_mean_zero() {
        let s = NamedSchedule::staircase34(4).build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = FamilySpec::single(FunctionSpec::RandomBalanced { stage: 2, cells: None, count: 3 }, true);
        let fam = build_family(&spec, &s, &mut rng).unwrap();
        assert_eq!(fam.len(), 3);
        for f in &fam {
            assert!(f.integral(&s).unwrap().norm() < 1e-12);
            assert!((f.norm_sq(&s).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_family() {
        let s = NamedSchedule::asym49(4).build().unwrap();
        let spec =
            FamilySpec::single(FunctionSpec::RandomLevelSet { stage: 2, cells: None, density: 0.4, count: 5 }, false);
        let a = build_family(&spec, &s, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = build_family(&spec, &s, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(default_cells(&s, 2).unwrap(), 11);
    }

    #[test]
    fn level_set_members_are_checked() {
        let s = NamedSchedule::flat(2, 4).build().unwrap();
        let spec = FunctionSpec::LevelSet { stage: 1, cells: Some(4), members: vec![4] };
        assert!(spec.build(&s, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
