//! Test-only oracles. They share nothing with the recursion in the library
//! beyond the stage geometry: functions are lifted by walking every copy
//! offset explicitly and shifted products are integrated in closed form on
//! the refined breakpoint partition.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rank1_core::koopman::StepFunction;
use rank1_core::{Scalar, Schedule};

/// Explicit pieces `(start, end, value)` of `f` lifted to stage `n`.
pub fn oracle_lift(schedule: &Schedule, f: &StepFunction, n: usize) -> Vec<(Scalar, Scalar, Complex64)> {
    let mut pieces: Vec<(Scalar, Scalar, Complex64)> = f
        .breakpoints
        .windows(2)
        .zip(&f.values)
        .filter(|(_, v)| v.norm() != 0.0)
        .map(|(b, v)| (b[0].clone(), b[1].clone(), *v))
        .collect();
    for m in f.stage..n {
        let st = schedule.stage(m).unwrap();
        let mut next = Vec::with_capacity(pieces.len() * st.offsets.len());
        for o in &st.offsets {
            for (a, b, v) in &pieces {
                next.push((o + a, o + b, *v));
            }
        }
        pieces = next;
    }
    pieces
}

fn value_at(pieces: &[(Scalar, Scalar, Complex64)], y: &Scalar) -> Complex64 {
    // Pieces are sorted and disjoint.
    let i = pieces.partition_point(|(a, _, _)| !y.lt(a));
    if i == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let (_, b, v) = &pieces[i - 1];
    if y.lt(b) {
        *v
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// `w_N ∫ Π_i F_i(y - t_i) dy` over `[0, h_N)` with every `F_i` lifted to
/// stage `n` (zero outside the tower).
pub fn oracle_multi(schedule: &Schedule, fs: &[StepFunction], times: &[Scalar], n: usize) -> Complex64 {
    let lifted: Vec<_> = fs.iter().map(|f| oracle_lift(schedule, f, n)).collect();
    let h = schedule.height(n).unwrap();
    let mut cuts = vec![Scalar::zero(), h.clone()];
    for (p, t) in lifted.iter().zip(times) {
        for (a, b, _) in p {
            for x in [a + t, b + t] {
                if x.signum() > 0 && x.lt(&h) {
                    cuts.push(x);
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    let half = Scalar::ratio(1, 2);
    let mut total = Complex64::new(0.0, 0.0);
    for w in cuts.windows(2) {
        let mid = &(&w[0] + &w[1]) * &half;
        let mut prod = Complex64::new((&w[1] - &w[0]).to_f64(), 0.0);
        for (p, t) in lifted.iter().zip(times) {
            prod *= value_at(p, &(&mid - t));
        }
        total += prod;
    }
    total * schedule.width(n).unwrap().to_f64()
}

/// `⟨U(t) f, g⟩` at stage `n`.
pub fn oracle_correlate(schedule: &Schedule, f: &StepFunction, g: &StepFunction, t: &Scalar, n: usize) -> Complex64 {
    oracle_multi(schedule, &[g.conj(), f.clone()], &[Scalar::zero(), t.clone()], n)
}

/// Random step function at stage `k` with breakpoints on a dyadic grid of
/// the tower height and small complex values.
pub fn random_step(rng: &mut ChaCha8Rng, schedule: &Schedule, k: usize) -> StepFunction {
    let h = schedule.height(k).unwrap();
    let cells = 16i64;
    let mut cuts: Vec<i64> = (1..cells).filter(|_| rng.gen_bool(0.3)).collect();
    cuts.insert(0, 0);
    cuts.push(cells);
    let mut bps = Vec::new();
    for c in &cuts {
        bps.push(&h * &Scalar::ratio(*c, cells));
    }
    let values = (0..cuts.len() - 1)
        .map(|_| {
            if rng.gen_bool(0.3) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(rng.gen_range(-2..=2) as f64, rng.gen_range(-1..=1) as f64 * 0.5)
            }
        })
        .collect();
    StepFunction::new(k, bps, values).unwrap()
}

/// Random time `p/q · h` with `|t| <= span · h`.
pub fn random_time(rng: &mut ChaCha8Rng, h: &Scalar, span: i64) -> Scalar {
    let q = [1, 2, 3, 4, 8, 7][rng.gen_range(0..6)];
    let p = rng.gen_range(-span * q..=span * q);
    h * &Scalar::ratio(p, q)
}
