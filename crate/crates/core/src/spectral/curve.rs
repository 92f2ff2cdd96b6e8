use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::Schedule;
use crate::koopman::{correlate_family, CorrelateOptions, StepFunction};
use crate::scalar::Scalar;

/// `c(t_i) = ⟨U_T(t_i)f, f⟩` on the uniform grid `t_i = i·Δt`,
/// `i = -n..=n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutocorrCurve {
    pub dt: f64,
    /// `n`, so the grid has `2n + 1` points and `T_max = n·Δt`.
    pub half_steps: usize,
    pub values: Vec<Complex64>,
    pub bounds: Vec<f64>,
}

impl AutocorrCurve {
    /// Samples an analytic curve; bounds are zero.
    pub fn from_fn(dt: f64, t_max: f64, c: impl Fn(f64) -> Complex64) -> Result<Self> {
        if !(dt > 0.0) || !(t_max >= 0.0) {
            return Err(Error::invalid(format!("need Δt > 0 and T_max >= 0, got {dt}, {t_max}")));
        }
        let n = (t_max / dt + 1e-9).floor() as usize;
        let values: Vec<Complex64> = (-(n as i64)..=n as i64).map(|i| c(i as f64 * dt)).collect();
        let bounds = vec![0.0; values.len()];
        Ok(AutocorrCurve { dt, half_steps: n, values, bounds })
    }

    pub fn t_max(&self) -> f64 {
        self.half_steps as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        (i as i64 - self.half_steps as i64) as f64 * self.dt
    }

    pub fn at_zero(&self) -> Complex64 {
        self.values[self.half_steps]
    }

    /// Checks `c(0) >= 0` real and `c(-t) = conj c(t)`, both up to the
    /// stored bounds plus a relative slack for roundoff.
    pub fn check_hermitian(&self) -> Result<()> {
        let n = self.half_steps;
        if self.values.len() != 2 * n + 1 || self.bounds.len() != self.values.len() {
            return Err(Error::invalid("curve has inconsistent lengths"));
        }
        let scale = self.at_zero().norm().max(1.0);
        let slack = |b: f64| b + 1e-9 * scale;
        let c0 = self.at_zero();
        if c0.im.abs() > slack(self.bounds[n]) || c0.re < -slack(self.bounds[n]) {
            return Err(Error::invalid(format!("c(0) = {c0} is not a nonnegative real")));
        }
        for i in 1..=n {
            let (a, b) = (self.values[n + i], self.values[n - i]);
            let gap = (b - a.conj()).norm();
            if gap > slack(self.bounds[n + i] + self.bounds[n - i]) {
                return Err(Error::invalid(format!(
                    "c(-t) differs from conj c(t) by {gap:e} at t = {}",
                    self.time(n + i)
                )));
            }
        }
        Ok(())
    }

    /// The same samples read on the time grid `Δt·s`: the curve of the flow
    /// run at speed `1/s`.
    pub fn rescaled(&self, s: f64) -> Self {
        AutocorrCurve { dt: self.dt * s, ..self.clone() }
    }
}

/// Samples `t ↦ ⟨U_T(t)f, f⟩` at `i·Δt` for `|i·Δt| <= T_max`.
pub fn autocorr_curve(schedule: &Schedule, f: &StepFunction, dt: &Scalar, t_max: &Scalar) -> Result<AutocorrCurve> {
    autocorr_curve_with(schedule, f, dt, t_max, &CorrelateOptions::default())
}

pub fn autocorr_curve_with(
    schedule: &Schedule,
    f: &StepFunction,
    dt: &Scalar,
    t_max: &Scalar,
    opts: &CorrelateOptions,
) -> Result<AutocorrCurve> {
    if dt.signum() <= 0 || t_max.signum() < 0 {
        return Err(Error::invalid(format!("need Δt > 0 and T_max >= 0, got {dt}, {t_max}")));
    }
    let n = (t_max / dt)
        .floor()
        .to_usize()
        .ok_or_else(|| Error::Range(format!("T_max / Δt = {} is too large", t_max / dt)))?;
    let pair = [(f.clone(), f.clone())];
    let mut values = Vec::with_capacity(2 * n + 1);
    let mut bounds = Vec::with_capacity(2 * n + 1);
    for i in -(n as i64)..=n as i64 {
        let t = dt * &Scalar::int(i);
        let c = correlate_family(schedule, &pair, &t, opts)?.remove(0);
        values.push(c.value);
        bounds.push(c.error_bound);
    }
    Ok(AutocorrCurve { dt: dt.to_f64(), half_steps: n, values, bounds })
}
