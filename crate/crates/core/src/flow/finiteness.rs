//! Partial sums of the finite-measure criterion `Σ_n h_n⁻¹ r_n⁻¹ Σ_j s_n(j)`.

use serde::{Deserialize, Serialize};

use super::schedule::Schedule;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Finiteness {
    /// The partial sum up to `horizon` stays within the budget. Nothing is
    /// claimed about the tail.
    FiniteSoFar { partial_sum: Scalar, horizon: usize },
    /// The partial sum exceeded the budget; `first_stage` is where it first did.
    Diverged { partial_sum: Scalar, horizon: usize, first_stage: usize },
    /// The schedule ends before the requested horizon.
    Inconclusive { partial_sum: Scalar, reached: usize, horizon: usize },
}

impl Finiteness {
    pub fn partial_sum(&self) -> &Scalar {
        match self {
            Finiteness::FiniteSoFar { partial_sum, .. }
            | Finiteness::Diverged { partial_sum, .. }
            | Finiteness::Inconclusive { partial_sum, .. } => partial_sum,
        }
    }
}

/// Term `n` of the series; the bottom spacer counts with the others.
pub fn criterion_term(schedule: &Schedule, n: usize) -> Result<Scalar> {
    let st = schedule.stage(n)?;
    Ok(&st.total_spacer() / &(&st.height * &Scalar::int(st.r() as i64)))
}

/// Partial sums `S_1, …, S_horizon` (shorter when the schedule ends first).
pub fn partial_sums(schedule: &Schedule, horizon: usize) -> Result<Vec<Scalar>> {
    let mut acc = Scalar::zero();
    let mut out = Vec::with_capacity(horizon);
    for n in 1..=horizon.min(schedule.depth()) {
        acc = &acc + &criterion_term(schedule, n)?;
        out.push(acc.clone());
    }
    Ok(out)
}

pub fn finiteness_test(schedule: &Schedule, horizon: usize, budget: &Scalar) -> Result<Finiteness> {
    if horizon == 0 {
        return Err(Error::invalid("finiteness horizon must be at least 1"));
    }
    let sums = partial_sums(schedule, horizon)?;
    let partial_sum = sums.last().cloned().unwrap_or_else(Scalar::zero);
    if let Some(i) = sums.iter().position(|s| budget.lt(s)) {
        return Ok(Finiteness::Diverged { partial_sum, horizon: sums.len(), first_stage: i + 1 });
    }
    if sums.len() < horizon {
        return Ok(Finiteness::Inconclusive { partial_sum, reached: sums.len(), horizon });
    }
    Ok(Finiteness::FiniteSoFar { partial_sum, horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{NamedSchedule, SpacerMap, StageParams};

    #[test]
    fn flat_is_zero() {
        let s = Schedule::named(NamedSchedule::flat(2, 8)).unwrap();
        let v = finiteness_test(&s, 8, &Scalar::one()).unwrap();
        assert_eq!(v, Finiteness::FiniteSoFar { partial_sum: Scalar::zero(), horizon: 8 });
    }

    #[test]
    fn unit_terms_diverge() {
        // s_n(j) = h_n with r = 2: every term is exactly one.
        let mut h = Scalar::one();
        let mut stages = Vec::new();
        for _ in 0..10 {
            stages.push(StageParams::new(2, SpacerMap::Constant { value: h.clone() }));
            h = &h * &Scalar::int(4);
        }
        let s = Schedule::explicit(Scalar::one(), Scalar::one(), stages).unwrap();
        let v = finiteness_test(&s, 10, &Scalar::ratio(19, 2)).unwrap();
        assert_eq!(v, Finiteness::Diverged { partial_sum: Scalar::int(10), horizon: 10, first_stage: 10 });
        let ok = finiteness_test(&s, 10, &Scalar::int(10)).unwrap();
        assert!(matches!(ok, Finiteness::FiniteSoFar { .. }));
    }

    #[test]
    fn horizon_past_depth_is_inconclusive() {
        let s = Schedule::named(NamedSchedule::flat(3, 4)).unwrap();
        let v = finiteness_test(&s, 6, &Scalar::one()).unwrap();
        assert!(matches!(v, Finiteness::Inconclusive { reached: 4, horizon: 6, .. }));
    }
}
