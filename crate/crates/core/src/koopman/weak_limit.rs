use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::correlate::{correlate_family, CorrelateOptions};
use super::step::StepFunction;
use crate::error::Result;
use crate::flow::Schedule;
use crate::scalar::Scalar;

/// The operator `αI + βU_T(s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakLimitTarget {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub shift: Scalar,
}

impl WeakLimitTarget {
    pub fn identity() -> Self {
        Self::scaled_identity(1.0)
    }

    pub fn zero() -> Self {
        Self::scaled_identity(0.0)
    }

    pub fn scaled_identity(alpha: f64) -> Self {
        WeakLimitTarget { alpha: Complex64::new(alpha, 0.0), beta: Complex64::new(0.0, 0.0), shift: Scalar::zero() }
    }

    /// `α I + β U_T(s)`.
    pub fn combination(alpha: f64, beta: f64, shift: Scalar) -> Self {
        WeakLimitTarget { alpha: Complex64::new(alpha, 0.0), beta: Complex64::new(beta, 0.0), shift }
    }

    fn needs_shift(&self) -> bool {
        self.beta != Complex64::new(0.0, 0.0) && !self.shift.is_zero()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakLimitTerm {
    pub j: usize,
    pub t: Scalar,
    /// `max_family |⟨U(t_j)f, g⟩ - α⟨f,g⟩ - β⟨U(s)f, g⟩|`.
    pub residual: f64,
    /// Largest combined error bound over the family.
    pub bound: f64,
    pub stage_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakLimitReport {
    pub target: WeakLimitTarget,
    pub terms: Vec<WeakLimitTerm>,
    pub threshold: Option<f64>,
    /// Whether the last residual lies below the threshold.
    pub final_below: Option<bool>,
}

impl WeakLimitReport {
    pub fn final_residual(&self) -> Option<f64> {
        self.terms.last().map(|t| t.residual)
    }
}

/// One time of a probe sequence, optionally evaluated at a deeper stage than
/// the default selection for a tighter bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeTime {
    pub t: Scalar,
    pub min_stage: Option<usize>,
}

impl ProbeTime {
    pub fn new(t: Scalar) -> Self {
        ProbeTime { t, min_stage: None }
    }
}

/// Residuals of `⟨U(t_j)f, g⟩` against the target over a finite test family,
/// one term per time (`j` is 1-based). No monotonicity is asserted.
pub fn weak_limit_probe(
    schedule: &Schedule,
    times: &[ProbeTime],
    target: &WeakLimitTarget,
    family: &[(StepFunction, StepFunction)],
    threshold: Option<f64>,
    opts: &CorrelateOptions,
) -> Result<WeakLimitReport> {
    let base = correlate_family(schedule, family, &Scalar::zero(), opts)?;
    // The shifted coefficient is exact at any stage; evaluating it as deep as
    // the deepest probe keeps its bound from dominating the residual bound.
    let shift_opts = CorrelateOptions {
        min_stage: times.iter().filter_map(|p| p.min_stage).chain(opts.min_stage).max(),
        ..opts.clone()
    };
    let shifted =
        if target.needs_shift() { Some(correlate_family(schedule, family, &target.shift, &shift_opts)?) } else { None };
    let mut terms = Vec::with_capacity(times.len());
    for (i, pt) in times.iter().enumerate() {
        let term_opts = CorrelateOptions {
            min_stage: match (opts.min_stage, pt.min_stage) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
            ..opts.clone()
        };
        let cur = correlate_family(schedule, family, &pt.t, &term_opts)?;
        let mut residual = 0.0f64;
        let mut bound = 0.0f64;
        let mut stage_used = 0;
        for (i, c) in cur.iter().enumerate() {
            let mut expect = target.alpha * base[i].value;
            let mut b = c.error_bound + target.alpha.norm() * base[i].error_bound;
            match &shifted {
                Some(s) => {
                    expect += target.beta * s[i].value;
                    b += target.beta.norm() * s[i].error_bound;
                }
                None => expect += target.beta * base[i].value,
            }
            residual = residual.max((c.value - expect).norm());
            bound = bound.max(b);
            stage_used = stage_used.max(c.stage_used);
        }
        terms.push(WeakLimitTerm { j: i + 1, t: pt.t.clone(), residual, bound, stage_used });
    }
    let final_below = match (threshold, terms.last()) {
        (Some(th), Some(last)) => Some(last.residual < th),
        _ => None,
    };
    Ok(WeakLimitReport { target: target.clone(), terms, threshold, final_below })
}
