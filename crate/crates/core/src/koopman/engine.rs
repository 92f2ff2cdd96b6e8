//! The offset recursion behind every correlation.
//!
//! For functions `F_0, …, F_{m-1}` on `X_n` (zero off `[0, h_n)`) let
//!
//! ```text
//! C_n(τ_1, …, τ_{m-1}) = ∫ F_0(z) Π_i F_i(z - τ_i) dz.
//! ```
//!
//! Lifting to `X_{n+1}` places a copy at each offset `o_j`, so
//! `C_{n+1}(τ⃗) = Σ_{j_0, …, j_{m-1}} C_n(τ_i + o_{j_i} - o_{j_0})`, and only
//! tuples with every `|δ_i| < h_n` and `|δ_i - δ_l| < h_n` can contribute.
//! Shifts are pushed down stage by stage with integer weights, grouped by
//! exact value so repeated shifts are evaluated once, and the base case on
//! `X_k` is an exact piecewise overlap integral.

use indexmap::IndexMap;
use num_complex::Complex64;

use super::step::{merge_breakpoints, StepFunction};
use crate::error::{Error, Result};
use crate::flow::{shift_key, visit_tuples, FastHash, Schedule, ShiftKey};
use crate::scalar::Scalar;

/// Weighted shift vectors at the bottom stage.
pub(crate) type ShiftTree = Vec<(Vec<Scalar>, f64)>;

/// Pushes the shift vector `taus` from stage `top` down to stage `k`.
pub(crate) fn descend(schedule: &Schedule, k: usize, top: usize, taus: Vec<Scalar>, guard: usize) -> Result<ShiftTree> {
    let mut level: ShiftTree = vec![(taus, 1.0)];
    for n in (k..top).rev() {
        let st = schedule.stage(n)?;
        let mut next: IndexMap<Vec<ShiftKey>, (Vec<Scalar>, f64), FastHash> = IndexMap::with_hasher(FastHash);
        let mut overflow = false;
        for (tau, w) in &level {
            visit_tuples(&st, tau, |deltas, count| {
                if overflow {
                    return;
                }
                let key: Vec<ShiftKey> = deltas.iter().map(|d| shift_key(d, &st.height)).collect();
                let add = w * count as f64;
                match next.get_mut(&key) {
                    Some(e) => e.1 += add,
                    None => {
                        next.insert(key, (deltas, add));
                        overflow = next.len() > guard;
                    }
                }
            });
            if overflow {
                return Err(Error::Resource {
                    stage: n,
                    detail: format!("more than {guard} distinct memoized shifts"),
                });
            }
        }
        level = next.into_values().collect();
    }
    Ok(level)
}

/// Functions of one batch resampled on a common partition of `[0, h_k)`.
pub(crate) struct Batch {
    partition: Vec<Scalar>,
    values: Vec<Vec<Complex64>>,
}

impl Batch {
    pub(crate) fn new(functions: &[&StepFunction]) -> Batch {
        let partition = merge_breakpoints(functions.iter().map(|f| &f.breakpoints[..]));
        let values = functions.iter().map(|f| f.sample_on(&partition)).collect();
        Batch { partition, values }
    }

    /// Pieces of `∫ F_0(z) Π F_i(z - τ_i) dz`: each item is the exact piece
    /// length with the partition cell index used by every slot.
    fn segments(&self, taus: &[Scalar]) -> Vec<(f64, Vec<usize>)> {
        let p = &self.partition;
        let h = p.last().expect("non-empty partition");
        let mut lo = Scalar::zero();
        let mut hi = h.clone();
        for t in taus {
            lo = lo.max(t);
            hi = hi.min(&(h + t));
        }
        let mut out = Vec::new();
        if !lo.lt(&hi) {
            return out;
        }
        let slots = taus.len() + 1;
        let shift = |s: usize| -> Option<&Scalar> { (s > 0).then(|| &taus[s - 1]) };
        // Cell of slot s containing the current point z: cell i with
        // p[i] <= z - τ_s < p[i+1].
        let mut cell: Vec<usize> = (0..slots)
            .map(|s| {
                let z = match shift(s) {
                    Some(t) => &lo - t,
                    None => lo.clone(),
                };
                p.partition_point(|b| !z.lt(b)) - 1
            })
            .collect();
        let mut cur = lo;
        while cur.lt(&hi) {
            let ends: Vec<Scalar> = (0..slots)
                .map(|s| match shift(s) {
                    Some(t) => &p[cell[s] + 1] + t,
                    None => p[cell[s] + 1].clone(),
                })
                .collect();
            let mut next = hi.clone();
            for e in &ends {
                next = next.min(e);
            }
            out.push(((&next - &cur).to_f64(), cell.clone()));
            for s in 0..slots {
                if !next.lt(&ends[s]) {
                    cell[s] += 1;
                }
            }
            cur = next;
        }
        out
    }

    /// `Σ_tree weight · C_k(τ⃗)` for each function tuple (indices into the
    /// batch, one per slot).
    pub(crate) fn evaluate(&self, tree: &ShiftTree, tuples: &[Vec<usize>]) -> Vec<Complex64> {
        let mut acc = vec![Neumaier::default(); tuples.len()];
        for (taus, w) in tree {
            let segs = self.segments(taus);
            if segs.is_empty() {
                continue;
            }
            for (a, tuple) in acc.iter_mut().zip(tuples) {
                let mut s = Complex64::new(0.0, 0.0);
                for (len, cells) in &segs {
                    let mut prod = Complex64::new(*len, 0.0);
                    for (slot, &fi) in tuple.iter().enumerate() {
                        prod *= self.values[fi][cells[slot]];
                    }
                    s += prod;
                }
                a.add(s * *w);
            }
        }
        acc.into_iter().map(Neumaier::total).collect()
    }
}

/// Compensated complex summation so the result does not depend on how
/// large the intermediate weights get.
#[derive(Clone, Copy, Default)]
struct Neumaier {
    sum: Complex64,
    comp: Complex64,
}

impl Neumaier {
    fn add(&mut self, x: Complex64) {
        let (re, cre) = two_sum(self.sum.re, x.re);
        let (im, cim) = two_sum(self.sum.im, x.im);
        self.sum = Complex64::new(re, im);
        self.comp += Complex64::new(cre, cim);
    }

    fn total(self) -> Complex64 {
        self.sum + self.comp
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let c = if a.abs() >= b.abs() { (a - s) + b } else { (b - s) + a };
    (s, c)
}
