use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::engine::{descend, Batch};
use super::step::{lift, StepFunction};
use crate::error::{Error, Result};
use crate::flow::{Schedule, DEFAULT_BLOWUP_GUARD};
use crate::scalar::Scalar;

/// A matrix coefficient with a rigorous bound on its distance to the true
/// value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub value: Complex64,
    pub error_bound: f64,
    pub stage_used: usize,
}

impl CorrelationResult {
    pub fn exact(value: Complex64, stage_used: usize) -> Self {
        CorrelationResult { value, error_bound: 0.0, stage_used }
    }
}

#[derive(Clone, Debug)]
pub struct CorrelateOptions {
    /// Evaluate at no shallower stage than this (tightens the bound).
    pub min_stage: Option<usize>,
    /// Required ratio `h_N / (h_k + |t|)`.
    pub margin: u32,
    /// Cap on distinct memoized shifts per stage.
    pub guard: usize,
}

impl Default for CorrelateOptions {
    fn default() -> Self {
        CorrelateOptions { min_stage: None, margin: 4, guard: DEFAULT_BLOWUP_GUARD }
    }
}

/// Smallest `N > k` with `h_N >= margin·(h_k + t_max)`, and at least
/// `min_stage`.
pub fn select_stage(schedule: &Schedule, k: usize, t_max: &Scalar, opts: &CorrelateOptions) -> Result<usize> {
    let hk = schedule.height(k)?;
    let need = &Scalar::int(opts.margin as i64) * &(&hk + t_max);
    let mut n = (k + 1).max(opts.min_stage.unwrap_or(0));
    loop {
        if n > schedule.depth() + 1 {
            return Err(Error::Range(format!(
                "|t| = {t_max} needs a tower of height {need}, beyond the {} available stages",
                schedule.depth()
            )));
        }
        if !schedule.height(n)?.lt(&need) {
            return Ok(n);
        }
        n += 1;
    }
}

/// Lifts every function to the deepest stage among them.
fn common_stage(schedule: &Schedule, fs: &[&StepFunction]) -> Result<(usize, Vec<StepFunction>)> {
    let k = fs.iter().map(|f| f.stage).max().ok_or_else(|| Error::invalid("no functions"))?;
    let lifted = fs
        .iter()
        .map(|f| if f.stage == k { f.check(schedule).map(|_| (*f).clone()) } else { lift(schedule, f, k) })
        .collect::<Result<Vec<_>>>()?;
    Ok((k, lifted))
}

/// `∫ Π_i f_i(y - t_i) dμ` for each tuple of `tuples`; every tuple has one
/// function per time. Returns the values, the stage used and `|t|·w_N`.
fn multi_point(
    schedule: &Schedule,
    tuples: &[Vec<&StepFunction>],
    times: &[Scalar],
    opts: &CorrelateOptions,
) -> Result<(Vec<Complex64>, usize, Scalar)> {
    if times.len() < 2 {
        return Err(Error::invalid("a correlation needs at least two times"));
    }
    if tuples.iter().any(|t| t.len() != times.len()) {
        return Err(Error::invalid("each function tuple needs one function per time"));
    }
    let all: Vec<&StepFunction> = tuples.iter().flatten().copied().collect();
    let (k, lifted) = common_stage(schedule, &all)?;
    let refs: Vec<&StepFunction> = lifted.iter().collect();
    let batch = Batch::new(&refs);
    let m = times.len();
    let index: Vec<Vec<usize>> = (0..tuples.len()).map(|i| (0..m).map(|s| i * m + s).collect()).collect();
    let taus: Vec<Scalar> = times[1..].iter().map(|t| t - &times[0]).collect();
    let t_max = taus.iter().fold(Scalar::zero(), |a, t| a.max(&t.abs()));
    if taus.iter().all(Scalar::is_zero) && opts.min_stage.is_none_or(|s| s <= k) {
        let w = schedule.width(k)?.to_f64();
        let vals = batch.evaluate(&vec![(taus, 1.0)], &index);
        return Ok((vals.into_iter().map(|v| v * w).collect(), k, Scalar::zero()));
    }
    let n = select_stage(schedule, k, &t_max, opts)?;
    let tree = descend(schedule, k, n, taus, opts.guard)?;
    let w_n = schedule.width(n)?;
    let vals = batch.evaluate(&tree, &index);
    let w = w_n.to_f64();
    Ok((vals.into_iter().map(|v| v * w).collect(), n, &t_max * &w_n))
}

/// `⟨U_T(t) f, g⟩ = ∫ f(y - t) · conj g(y) dμ`.
pub fn correlate(schedule: &Schedule, f: &StepFunction, g: &StepFunction, t: &Scalar) -> Result<CorrelationResult> {
    correlate_with(schedule, f, g, t, &CorrelateOptions::default())
}

pub fn correlate_with(
    schedule: &Schedule,
    f: &StepFunction,
    g: &StepFunction,
    t: &Scalar,
    opts: &CorrelateOptions,
) -> Result<CorrelationResult> {
    let pair = [(f.clone(), g.clone())];
    Ok(correlate_family(schedule, &pair, t, opts)?.remove(0))
}

/// Correlations of a whole test family at one time; the shift recursion is
/// shared by all pairs.
pub fn correlate_family(
    schedule: &Schedule,
    pairs: &[(StepFunction, StepFunction)],
    t: &Scalar,
    opts: &CorrelateOptions,
) -> Result<Vec<CorrelationResult>> {
    let conj: Vec<StepFunction> = pairs.iter().map(|(_, g)| g.conj()).collect();
    let tuples: Vec<Vec<&StepFunction>> = pairs.iter().zip(&conj).map(|((f, _), cg)| vec![cg, f]).collect();
    let times = [Scalar::zero(), t.clone()];
    let (vals, n, tw) = multi_point(schedule, &tuples, &times, opts)?;
    let tw = tw.to_f64();
    Ok(pairs
        .iter()
        .zip(vals)
        .map(|((f, g), value)| CorrelationResult {
            value,
            error_bound: f.sup_norm() * g.sup_norm() * tw,
            stage_used: n,
        })
        .collect())
}

/// `⟨f, g⟩` on the common stage.
pub fn inner_product(schedule: &Schedule, f: &StepFunction, g: &StepFunction) -> Result<Complex64> {
    Ok(correlate(schedule, f, g, &Scalar::zero())?.value)
}

/// `∫ Π_i f_i(T_{-t_i} x) dμ(x)`. No conjugation is applied.
pub fn m_correlate(schedule: &Schedule, functions: &[StepFunction], times: &[Scalar]) -> Result<CorrelationResult> {
    m_correlate_with(schedule, functions, times, &CorrelateOptions::default())
}

pub fn m_correlate_with(
    schedule: &Schedule,
    functions: &[StepFunction],
    times: &[Scalar],
    opts: &CorrelateOptions,
) -> Result<CorrelationResult> {
    Ok(m_correlate_family(schedule, &[functions.to_vec()], times, opts)?.remove(0))
}

pub fn m_correlate_family(
    schedule: &Schedule,
    tuples: &[Vec<StepFunction>],
    times: &[Scalar],
    opts: &CorrelateOptions,
) -> Result<Vec<CorrelationResult>> {
    let refs: Vec<Vec<&StepFunction>> = tuples.iter().map(|t| t.iter().collect()).collect();
    let (vals, n, tw) = multi_point(schedule, &refs, times, opts)?;
    let tw = tw.to_f64() * times.len() as f64;
    Ok(tuples
        .iter()
        .zip(vals)
        .map(|(fs, value)| CorrelationResult {
            value,
            error_bound: fs.iter().map(StepFunction::sup_norm).product::<f64>() * tw,
            stage_used: n,
        })
        .collect())
}
