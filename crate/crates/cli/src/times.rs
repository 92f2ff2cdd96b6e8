//! Time sequences `t_j` for weak-limit probes.

use anyhow::{bail, Context, Result};
use rank1_core::flow::{Thm44Class, Thm44Params};
use rank1_core::koopman::ProbeTime;
use rank1_core::{NamedSchedule, Scalar, Schedule};
use serde::{Deserialize, Serialize};

/// A thm44 stage class, with scales given by value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ClassSpec {
    L1 {
        scale: Scalar,
        #[serde(default = "two")]
        q: u64,
    },
    L2 {
        scale: Scalar,
        #[serde(default = "two")]
        q: u64,
    },
    M {
        tuple: Vec<Scalar>,
        /// 1-based position in the sorted tuple.
        l0: usize,
    },
}

fn two() -> u64 {
    2
}

pub fn thm44_params(schedule: &Schedule) -> Result<&Thm44Params> {
    match schedule.named_spec() {
        Some(NamedSchedule::Thm44(p)) => Ok(p),
        _ => bail!("this selection needs a thm44 schedule"),
    }
}

fn sorted_scales(p: &Thm44Params) -> Vec<Scalar> {
    let mut s = p.scales.clone();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

fn scale_index(sorted: &[Scalar], s: &Scalar) -> Result<usize> {
    sorted.iter().position(|x| x == s).with_context(|| format!("scale {s} is not in the schedule's scale set"))
}

impl ClassSpec {
    pub fn resolve(&self, p: &Thm44Params) -> Result<Thm44Class> {
        let sorted = sorted_scales(p);
        Ok(match self {
            ClassSpec::L1 { scale, q } => Thm44Class::L1 { scale: scale_index(&sorted, scale)?, q: *q },
            ClassSpec::L2 { scale, q } => Thm44Class::L2 { scale: scale_index(&sorted, scale)?, q: *q },
            ClassSpec::M { tuple, l0 } => {
                let mut idx = tuple.iter().map(|s| scale_index(&sorted, s)).collect::<Result<Vec<_>>>()?;
                idx.sort_unstable();
                if *l0 == 0 || *l0 > idx.len() {
                    bail!("l0 = {l0} is outside the tuple of size {}", idx.len());
                }
                Thm44Class::M { tuple: idx, l0: *l0 }
            }
        })
    }
}

/// Which stages a height-based sequence runs over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StageSel {
    List(Vec<usize>),
    Group(StageGroup),
    Class { class: ClassSpec },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageGroup {
    /// Staircase stages of a staircase34 schedule.
    Staircase,
    /// Five-copy stages of an asym49 schedule.
    Asymmetric,
    /// The deepest staircase stage only.
    DeepestStaircase,
}

impl StageSel {
    pub fn stages(&self, schedule: &Schedule) -> Result<Vec<usize>> {
        let named = schedule.named_spec();
        let out = match self {
            StageSel::List(v) => v.clone(),
            StageSel::Group(g) => {
                let Some(n) = named else { bail!("stage group {g:?} needs a named schedule") };
                match g {
                    StageGroup::Staircase => n.staircase_stages(),
                    StageGroup::DeepestStaircase => n.staircase_stages().last().copied().into_iter().collect(),
                    StageGroup::Asymmetric => n.asymmetric_stages(),
                }
            }
            StageSel::Class { class } => {
                let p = thm44_params(schedule)?;
                p.stages_of(&class.resolve(p)?)
            }
        };
        if out.is_empty() {
            bail!("stage selection {self:?} is empty for this schedule");
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeSeq {
    Explicit {
        times: Vec<Scalar>,
    },
    /// `t_j = 0`, `count` times.
    Zero {
        count: usize,
    },
    /// `t = factor · h_n`.
    Heights {
        stages: StageSel,
        factor: Scalar,
    },
    /// `t = -d_n h_n` with `d_n = round(fraction · r_{n-1}) / r_{n-1}`, the
    /// nearest ratio that moves whole copies of the flat stage below.
    FlatFraction {
        stages: StageSel,
        fraction: Scalar,
    },
    /// `t_i = c_i · h_n` for `count` factors evenly spaced from `from` to `to`.
    HeightGrid {
        stages: StageSel,
        from: Scalar,
        to: Scalar,
        count: usize,
    },
    /// Pair-layout times of a thm44 M class times `multiplier`.
    PairTimes {
        class: ClassSpec,
        #[serde(default = "one")]
        multiplier: Scalar,
    },
}

fn one() -> Scalar {
    Scalar::one()
}

/// A time with the tower stage it was derived from (if any).
#[derive(Clone, Debug, PartialEq)]
pub struct StagedTime {
    pub t: Scalar,
    pub stage: Option<usize>,
}

impl StagedTime {
    /// Probe time that forces evaluation `extra` stages below the natural one.
    pub fn probe(&self, extra: usize) -> ProbeTime {
        ProbeTime { t: self.t.clone(), min_stage: self.stage.filter(|_| extra > 0).map(|n| n + 1 + extra) }
    }
}

impl TimeSeq {
    pub fn times(&self, schedule: &Schedule) -> Result<Vec<StagedTime>> {
        let staged = |n: usize, t: Scalar| StagedTime { t, stage: Some(n) };
        Ok(match self {
            TimeSeq::Explicit { times } => times.iter().map(|t| StagedTime { t: t.clone(), stage: None }).collect(),
            TimeSeq::Zero { count } => vec![StagedTime { t: Scalar::zero(), stage: None }; *count],
            TimeSeq::Heights { stages, factor } => stages
                .stages(schedule)?
                .into_iter()
                .map(|n| Ok(staged(n, factor * &schedule.height(n)?)))
                .collect::<Result<_>>()?,
            TimeSeq::FlatFraction { stages, fraction } => {
                let mut out = Vec::new();
                for n in stages.stages(schedule)? {
                    if n < 2 {
                        continue;
                    }
                    let r = schedule.stage(n - 1)?.r() as i64;
                    let copies =
                        (fraction * &Scalar::int(r)).round_i64().context("fraction · r does not fit an integer")?;
                    let d = Scalar::ratio(copies, r);
                    out.push(staged(n, -(&d * &schedule.height(n)?)));
                }
                out
            }
            TimeSeq::HeightGrid { stages, from, to, count } => {
                if *count < 2 {
                    bail!("height-grid needs at least two points");
                }
                let mut out = Vec::new();
                for n in stages.stages(schedule)? {
                    let h = schedule.height(n)?;
                    for i in 0..*count {
                        let c = from + &(&(to - from) * &Scalar::ratio(i as i64, *count as i64 - 1));
                        out.push(staged(n, &c * &h));
                    }
                }
                out
            }
            TimeSeq::PairTimes { class, multiplier } => {
                let p = thm44_params(schedule)?;
                let cls = class.resolve(p)?;
                let Thm44Class::M { tuple, .. } = &cls else {
                    bail!("pair-times needs an M class");
                };
                let mut out = Vec::new();
                for n in p.stages_of(&cls) {
                    let occurrence = p.slot(n).occurrence;
                    let t = p.pair_time(tuple, occurrence, &schedule.height(n)?);
                    out.push(staged(n, multiplier * &t));
                }
                out
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_fraction_rounds_to_whole_copies() {
        let s = NamedSchedule::staircase34(6).build().unwrap();
        let seq = TimeSeq::FlatFraction { stages: StageSel::List(vec![4]), fraction: Scalar::ratio(9, 10) };
        let t = seq.times(&s).unwrap();
        // r_3 = 64, round(57.6) = 58.
        assert_eq!(t[0].t, -(&Scalar::ratio(58, 64) * &s.height(4).unwrap()));
        assert_eq!(t[0].stage, Some(4));
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let s = NamedSchedule::staircase34(4).build().unwrap();
        let seq = TimeSeq::HeightGrid {
            stages: StageSel::List(vec![2]),
            from: Scalar::int(-1),
            to: Scalar::int(-10),
            count: 30,
        };
        let t = seq.times(&s).unwrap();
        assert_eq!(t.len(), 30);
        assert_eq!(t[29].t, &Scalar::int(-10) * &s.height(2).unwrap());
    }

    #[test]
    fn stage_selections_parse() {
        let a: StageSel = serde_json::from_str("[2, 4]").unwrap();
        assert_eq!(a, StageSel::List(vec![2, 4]));
        let b: StageSel = serde_json::from_str(r#""deepest-staircase""#).unwrap();
        assert_eq!(b, StageSel::Group(StageGroup::DeepestStaircase));
        let c: StageSel = serde_json::from_str(r#"{"class": {"type": "l2", "scale": "2/1"}}"#).unwrap();
        assert!(matches!(c, StageSel::Class { .. }));
    }
}
