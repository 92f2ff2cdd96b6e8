use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Schedule, DEFAULT_BLOWUP_GUARD};
use crate::scalar::Scalar;

/// An `X_k`-measurable function: constant on each `[b_{i-1}, b_i)` of the
/// height axis of tower `k`, with `b_0 = 0` and `b_m = h_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub stage: usize,
    pub breakpoints: Vec<Scalar>,
    pub values: Vec<Complex64>,
}

impl StepFunction {
    /// Checks the breakpoint structure; the top breakpoint is checked
    /// against the schedule by [`StepFunction::check`].
    pub fn new(stage: usize, breakpoints: Vec<Scalar>, values: Vec<Complex64>) -> Result<Self> {
        let f = StepFunction { stage, breakpoints, values };
        f.check_shape()?;
        Ok(f)
    }

    fn check_shape(&self) -> Result<()> {
        if self.stage == 0 {
            return Err(Error::invalid("step function stage must be at least 1"));
        }
        if self.values.is_empty() || self.breakpoints.len() != self.values.len() + 1 {
            return Err(Error::invalid(format!(
                "step function needs one more breakpoint than values (got {} and {})",
                self.breakpoints.len(),
                self.values.len()
            )));
        }
        if !self.breakpoints[0].is_zero() {
            return Err(Error::invalid("first breakpoint must be 0"));
        }
        if self.breakpoints.windows(2).any(|w| !w[0].lt(&w[1])) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        if self.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("step function values must be finite"));
        }
        Ok(())
    }

    /// Full validation against the tower heights of `schedule`.
    pub fn check(&self, schedule: &Schedule) -> Result<()> {
        self.check_shape()?;
        let h = schedule.height(self.stage)?;
        if self.height() != &h {
            return Err(Error::invalid(format!(
                "top breakpoint {} differs from h_{} = {h}",
                self.height(),
                self.stage
            )));
        }
        Ok(())
    }

    /// Function from disjoint pieces `[a, b) ↦ value`; zero elsewhere.
    pub fn from_pieces(schedule: &Schedule, stage: usize, pieces: &[(Scalar, Scalar, Complex64)]) -> Result<Self> {
        let h = schedule.height(stage)?;
        let mut sorted: Vec<_> = pieces.to_vec();
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut bps = vec![Scalar::zero()];
        let mut vals = Vec::new();
        for (a, b, v) in sorted {
            if a.signum() < 0 || h.lt(&b) || !a.lt(&b) {
                return Err(Error::invalid(format!("piece [{a}, {b}) is not inside [0, {h})")));
            }
            let last = bps.last().expect("non-empty");
            if a.lt(last) {
                return Err(Error::invalid("pieces overlap"));
            }
            if last.lt(&a) {
                vals.push(Complex64::new(0.0, 0.0));
                bps.push(a);
            }
            vals.push(v);
            bps.push(b);
        }
        if bps.last().expect("non-empty").lt(&h) {
            vals.push(Complex64::new(0.0, 0.0));
            bps.push(h);
        }
        Ok(StepFunction { stage, breakpoints: bps, values: vals }.merged())
    }

    pub fn indicator(schedule: &Schedule, stage: usize, a: Scalar, b: Scalar) -> Result<Self> {
        Self::from_pieces(schedule, stage, &[(a, b, Complex64::new(1.0, 0.0))])
    }

    pub fn constant(schedule: &Schedule, stage: usize, c: Complex64) -> Result<Self> {
        let h = schedule.height(stage)?;
        Self::new(stage, vec![Scalar::zero(), h], vec![c])
    }

    pub fn height(&self) -> &Scalar {
        self.breakpoints.last().expect("validated")
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Value at height `y`; zero outside `[0, h_k)`.
    pub fn value_at(&self, y: &Scalar) -> Complex64 {
        if y.signum() < 0 || !y.lt(self.height()) {
            return Complex64::new(0.0, 0.0);
        }
        let i = self.breakpoints.partition_point(|b| !y.lt(b));
        self.values[i - 1]
    }

    pub fn conj(&self) -> Self {
        StepFunction {
            stage: self.stage,
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        StepFunction {
            stage: self.stage,
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Pointwise combination of two functions on the same tower.
    pub fn zip_with(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.stage != other.stage || self.height() != other.height() {
            return Err(Error::invalid("pointwise combination needs a common stage"));
        }
        let bps = merge_breakpoints([&self.breakpoints[..], &other.breakpoints[..]]);
        let vals = bps[..bps.len() - 1].iter().map(|y| op(self.value_at(y), other.value_at(y))).collect();
        Ok(StepFunction { stage: self.stage, breakpoints: bps, values: vals }.merged())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Adjacent pieces with equal values joined.
    pub fn merged(mut self) -> Self {
        let mut bps = vec![self.breakpoints[0].clone()];
        let mut vals: Vec<Complex64> = Vec::with_capacity(self.values.len());
        for (i, v) in self.values.iter().enumerate() {
            if vals.last() == Some(v) {
                *bps.last_mut().expect("non-empty") = self.breakpoints[i + 1].clone();
            } else {
                vals.push(*v);
                bps.push(self.breakpoints[i + 1].clone());
            }
        }
        self.breakpoints = bps;
        self.values = vals;
        self
    }

    /// Values resampled on a finer partition containing every breakpoint.
    pub(crate) fn sample_on(&self, partition: &[Scalar]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(partition.len() - 1);
        let mut i = 0;
        for y in &partition[..partition.len() - 1] {
            while i + 1 < self.values.len() && !y.lt(&self.breakpoints[i + 1]) {
                i += 1;
            }
            out.push(self.values[i]);
        }
        out
    }

    /// `∫ |f|² dμ` over tower `k`, using `w_k`.
    pub fn norm_sq(&self, schedule: &Schedule) -> Result<f64> {
        let w = schedule.width(self.stage)?.to_f64();
        Ok(w * self
            .values
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(v, b)| v.norm_sqr() * (&b[1] - &b[0]).to_f64())
            .sum::<f64>())
    }

    /// `∫ f dμ`.
    pub fn integral(&self, schedule: &Schedule) -> Result<Complex64> {
        let w = schedule.width(self.stage)?.to_f64();
        Ok(self
            .values
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(v, b)| v * (&b[1] - &b[0]).to_f64())
            .sum::<Complex64>()
            * w)
    }

    /// `(Rf)(y) = f(h_k - y)`.
    pub fn reflect(&self) -> Self {
        let h = self.height();
        let bps = self.breakpoints.iter().rev().map(|b| h - b).collect();
        let vals = self.values.iter().rev().copied().collect();
        StepFunction { stage: self.stage, breakpoints: bps, values: vals }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("step functions always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: StepFunction = serde_json::from_str(text).map_err(|e| Error::invalid(format!("step function: {e}")))?;
        f.check_shape()?;
        Ok(f)
    }
}

/// Sorted union of several breakpoint lists.
pub(crate) fn merge_breakpoints<'a>(lists: impl IntoIterator<Item = &'a [Scalar]>) -> Vec<Scalar> {
    let mut all: Vec<Scalar> = lists.into_iter().flatten().cloned().collect();
    all.sort_by(|a, b| a.total_cmp(b));
    all.dedup_by(|a, b| a == b);
    all
}

/// `f` on `X_n` as a function on `X_N`: `f` on every copy of `X_n`, zero on
/// every spacer level. Materializes all copies, so it is only meant for
/// shallow lifts.
pub fn lift(schedule: &Schedule, f: &StepFunction, to_stage: usize) -> Result<StepFunction> {
    lift_guarded(schedule, f, to_stage, DEFAULT_BLOWUP_GUARD)
}

pub fn lift_guarded(schedule: &Schedule, f: &StepFunction, to_stage: usize, guard: usize) -> Result<StepFunction> {
    if to_stage < f.stage {
        return Err(Error::invalid(format!("cannot lift a stage-{} function down to stage {to_stage}", f.stage)));
    }
    f.check(schedule)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut cur = f.clone();
    for n in f.stage..to_stage {
        let st = schedule.stage(n)?;
        let mut bps = vec![Scalar::zero()];
        let mut vals = Vec::new();
        let push = |end: Scalar, v: Complex64, bps: &mut Vec<Scalar>, vals: &mut Vec<Complex64>| {
            if bps.last().expect("non-empty").lt(&end) {
                vals.push(v);
                bps.push(end);
            }
        };
        for o in &st.offsets {
            push(o.clone(), zero, &mut bps, &mut vals);
            for (i, v) in cur.values.iter().enumerate() {
                push(o + &cur.breakpoints[i + 1], *v, &mut bps, &mut vals);
            }
            if bps.len() > guard {
                return Err(Error::Resource {
                    stage: n + 1,
                    detail: format!("lift needs more than {guard} breakpoints"),
                });
            }
        }
        push(st.next_height.clone(), zero, &mut bps, &mut vals);
        cur = StepFunction { stage: n + 1, breakpoints: bps, values: vals }.merged();
    }
    Ok(cur)
}

/// Reflection `(Rf)(y) = f(h_k - y)` inside tower `k`.
pub fn reflect(f: &StepFunction) -> StepFunction {
    f.reflect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{NamedSchedule, SpacerMap, StageParams};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn lift_flat_two_copies() {
        let s = Schedule::named(NamedSchedule::flat(2, 4)).unwrap();
        let f = StepFunction::indicator(&s, 1, Scalar::zero(), Scalar::one()).unwrap();
        let g = lift(&s, &f, 2).unwrap();
        assert_eq!(g.breakpoints, vec![Scalar::zero(), Scalar::int(2)]);
        assert_eq!(g.values, vec![c(1.0)]);
        assert_eq!(lift(&s, &f, 1).unwrap(), f);
    }

    #[test]
    fn lift_with_top_spacer() {
        let s = Schedule::explicit(
            Scalar::one(),
            Scalar::one(),
            vec![StageParams::new(2, SpacerMap::Explicit { values: vec![Scalar::zero(), Scalar::one()] })],
        )
        .unwrap();
        let f = StepFunction::indicator(&s, 1, Scalar::zero(), Scalar::one()).unwrap();
        let g = lift(&s, &f, 2).unwrap();
        assert_eq!(g.breakpoints, vec![Scalar::zero(), Scalar::int(2), Scalar::int(3)]);
        assert_eq!(g.values, vec![c(1.0), c(0.0)]);
    }

    #[test]
    fn pieces_fill_gaps_and_merge() {
        let s = Schedule::named(NamedSchedule::flat(2, 3)).unwrap();
        let f = StepFunction::from_pieces(
            &s,
            2,
            &[(Scalar::ratio(1, 2), Scalar::one(), c(2.0)), (Scalar::one(), Scalar::ratio(3, 2), c(2.0))],
        )
        .unwrap();
        assert_eq!(f.values, vec![c(0.0), c(2.0), c(0.0)]);
        assert_eq!(f.breakpoints.len(), 4);
        assert!(f.check(&s).is_ok());
    }

    #[test]
    fn reflect_is_involution() {
        let s = Schedule::named(NamedSchedule::flat(3, 3)).unwrap();
        let f = StepFunction::from_pieces(&s, 2, &[(Scalar::ratio(1, 3), Scalar::int(2), c(1.5))]).unwrap();
        assert_eq!(f.reflect().reflect(), f);
        assert_eq!(f.reflect().value_at(&Scalar::ratio(5, 2)), c(1.5));
    }

    #[test]
    fn json_round_trip() {
        let s = Schedule::named(NamedSchedule::flat(2, 3)).unwrap();
        let f = StepFunction::indicator(&s, 1, Scalar::zero(), Scalar::ratio(1, 2)).unwrap();
        let j = f.to_json();
        assert_eq!(j, r#"{"stage":1,"breakpoints":["0/1","1/2","1/1"],"values":[[1.0,0.0],[0.0,0.0]]}"#);
        assert_eq!(StepFunction::from_json(&j).unwrap(), f);
    }

    #[test]
    fn bad_shapes_rejected() {
        assert!(StepFunction::new(1, vec![Scalar::zero()], vec![]).is_err());
        assert!(StepFunction::new(1, vec![Scalar::one(), Scalar::int(2)], vec![c(1.0)]).is_err());
        assert!(StepFunction::new(1, vec![Scalar::zero(), Scalar::zero()], vec![c(1.0)]).is_err());
    }
}
