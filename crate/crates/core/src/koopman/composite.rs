//! Correlations of flows assembled from one rank-one flow: Cartesian
//! products of rescaled copies, direct sums over a scale set, and Fock
//! (symmetric tensor) components.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::correlate::{correlate, correlate_with, CorrelateOptions, CorrelationResult};
use super::step::StepFunction;
use crate::error::{Error, Result};
use crate::flow::Schedule;
use crate::scalar::Scalar;

/// Largest matrix handled by [`permanent`].
pub const MAX_PERMANENT: usize = 20;

/// Rigorous bound for a product of uncertain factors:
/// `|Π v_i - Π v_i'| <= Π(|v_i| + b_i) - Π|v_i|` when `|v_i - v_i'| <= b_i`.
fn product_bound(factors: &[(Complex64, f64)]) -> f64 {
    let upper: f64 = factors.iter().map(|(v, b)| v.norm() + b).product();
    let centre: f64 = factors.iter().map(|(v, _)| v.norm()).product();
    (upper - centre).max(0.0)
}

/// One factor `(T∘c, f, g)` of a product flow.
#[derive(Clone, Debug)]
pub struct ProductFactor<'a> {
    pub schedule: &'a Schedule,
    pub scale: Scalar,
    pub f: StepFunction,
    pub g: StepFunction,
}

/// `⟨U(t)(⊗f_i), ⊗g_i⟩` for the product of the rescaled flows `T_i∘c_i`,
/// which factorizes as `Π_i ⟨U_{T_i}(c_i t) f_i, g_i⟩`.
pub fn product_correlate(factors: &[ProductFactor<'_>], t: &Scalar) -> Result<CorrelationResult> {
    if factors.is_empty() {
        return Err(Error::invalid("product of no factors"));
    }
    let parts =
        factors.iter().map(|p| correlate(p.schedule, &p.f, &p.g, &(&p.scale * t))).collect::<Result<Vec<_>>>()?;
    Ok(combine_product(&parts, &vec![1; parts.len()]))
}

fn combine_product(parts: &[CorrelationResult], powers: &[u32]) -> CorrelationResult {
    let mut value = Complex64::new(1.0, 0.0);
    let mut factors = Vec::new();
    for (p, &n) in parts.iter().zip(powers) {
        for _ in 0..n {
            value *= p.value;
            factors.push((p.value, p.error_bound));
        }
    }
    CorrelationResult {
        value,
        error_bound: product_bound(&factors),
        stage_used: parts.iter().map(|p| p.stage_used).max().unwrap_or(0),
    }
}

/// `⟨U_W(t) f, g⟩` for `W_t(x, s) = (T_{st} x, s)` on `X × S_fin`: the sum of
/// `⟨U_T(st) f_s, g_s⟩` over scales where both components are present.
pub fn direct_sum_correlate(
    schedule: &Schedule,
    scales: &[Scalar],
    f: &[Option<StepFunction>],
    g: &[Option<StepFunction>],
    t: &Scalar,
) -> Result<CorrelationResult> {
    if f.len() != scales.len() || g.len() != scales.len() {
        return Err(Error::invalid("one component slot per scale is required"));
    }
    let mut value = Complex64::new(0.0, 0.0);
    let mut error_bound = 0.0;
    let mut stage_used = 0;
    for ((s, fs), gs) in scales.iter().zip(f).zip(g) {
        if let (Some(fs), Some(gs)) = (fs, gs) {
            let c = correlate(schedule, fs, gs, &(s * t))?;
            value += c.value;
            error_bound += c.error_bound;
            stage_used = stage_used.max(c.stage_used);
        }
    }
    Ok(CorrelationResult { value, error_bound, stage_used })
}

/// The block `U_T(z_1)^{⊙n_1} ⊗ … ⊗ U_T(z_k)^{⊙n_k}` with a product test
/// vector `⊗ f_l^{⊙n_l}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockComponent {
    pub shifts: Vec<Scalar>,
    pub multiplicities: Vec<u32>,
    pub vectors: Vec<StepFunction>,
}

impl FockComponent {
    pub fn new(shifts: Vec<Scalar>, multiplicities: Vec<u32>, vectors: Vec<StepFunction>) -> Result<Self> {
        if shifts.is_empty() || shifts.len() != multiplicities.len() || shifts.len() != vectors.len() {
            return Err(Error::invalid("a Fock component needs matching shifts, multiplicities and vectors"));
        }
        if shifts.windows(2).any(|w| !w[0].lt(&w[1])) {
            return Err(Error::invalid("Fock component shifts must be strictly increasing"));
        }
        if multiplicities.contains(&0) {
            return Err(Error::invalid("Fock component multiplicities must be positive"));
        }
        Ok(FockComponent { shifts, multiplicities, vectors })
    }
}

/// Diagonal matrix coefficient of the component at power `t`:
/// `Π_l ⟨U_T(s_l t) f_l, f_l⟩^{n_l}`.
pub fn component_correlate(schedule: &Schedule, c: &FockComponent, t: &Scalar) -> Result<CorrelationResult> {
    component_correlate_with(schedule, c, t, &CorrelateOptions::default())
}

pub fn component_correlate_with(
    schedule: &Schedule,
    c: &FockComponent,
    t: &Scalar,
    opts: &CorrelateOptions,
) -> Result<CorrelationResult> {
    let parts = c
        .shifts
        .iter()
        .zip(&c.vectors)
        .map(|(s, f)| correlate_with(schedule, f, f, &(s * t), opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_product(&parts, &c.multiplicities))
}

/// Permanent by Ryser's formula with Gray-code updates, `O(2^n n)`.
pub fn permanent(m: &[Vec<Complex64>]) -> Result<Complex64> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("permanent needs a square matrix"));
    }
    if n > MAX_PERMANENT {
        return Err(Error::Resource {
            stage: 0,
            detail: format!("permanent of a {n}×{n} matrix exceeds the {MAX_PERMANENT}×{MAX_PERMANENT} limit"),
        });
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1 << n) {
        let next = k ^ (k >> 1);
        let j = (next ^ gray).trailing_zeros() as usize;
        let added = next & (1 << j) != 0;
        for (i, row) in m.iter().enumerate() {
            if added {
                row_sums[i] += row[j];
            } else {
                row_sums[i] -= row[j];
            }
        }
        gray = next;
        let prod: Complex64 = row_sums.iter().product();
        if (n - next.count_ones() as usize).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(total)
}

/// `⟨V^{⊙n}(f_1⊙…⊙f_n), g_1⊙…⊙g_n⟩ = perm(⟨Vf_i, g_j⟩)` (unnormalized
/// symmetric tensors). The bound uses monotonicity of the permanent on
/// non-negative matrices: `perm(|M| + E) - perm(|M|)`.
pub fn sym_tensor_correlate(gram: &[Vec<CorrelationResult>]) -> Result<CorrelationResult> {
    let vals: Vec<Vec<Complex64>> = gram.iter().map(|r| r.iter().map(|c| c.value).collect()).collect();
    let value = permanent(&vals)?;
    let abs: Vec<Vec<Complex64>> =
        gram.iter().map(|r| r.iter().map(|c| Complex64::new(c.value.norm(), 0.0)).collect()).collect();
    let up: Vec<Vec<Complex64>> =
        gram.iter().map(|r| r.iter().map(|c| Complex64::new(c.value.norm() + c.error_bound, 0.0)).collect()).collect();
    let error_bound = (permanent(&up)?.re - permanent(&abs)?.re).max(0.0);
    let stage_used = gram.iter().flatten().map(|c| c.stage_used).max().unwrap_or(0);
    Ok(CorrelationResult { value, error_bound, stage_used })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn naive(m: &[Vec<Complex64>]) -> Complex64 {
        fn rec(m: &[Vec<Complex64>], row: usize, used: &mut Vec<bool>) -> Complex64 {
            if row == m.len() {
                return c(1.0);
            }
            let mut s = c(0.0);
            for j in 0..m.len() {
                if !used[j] {
                    used[j] = true;
                    s += m[row][j] * rec(m, row + 1, used);
                    used[j] = false;
                }
            }
            s
        }
        rec(m, 0, &mut vec![false; m.len()])
    }

    #[test]
    fn small_permanents() {
        assert_eq!(permanent(&[vec![c(3.0)]]).unwrap(), c(3.0));
        assert_eq!(permanent(&[vec![c(1.0); 2], vec![c(1.0); 2]]).unwrap(), c(2.0));
        let id: Vec<Vec<Complex64>> = (0..3).map(|i| (0..3).map(|j| c((i == j) as u8 as f64)).collect()).collect();
        assert_eq!(permanent(&id).unwrap(), c(1.0));
    }

    #[test]
    fn ryser_matches_expansion() {
        let m: Vec<Vec<Complex64>> = (0..6)
            .map(|i| {
                (0..6)
                    .map(|j| Complex64::new((i * 7 + j * 3) as f64 % 5.0 - 2.0, (i + 2 * j) as f64 % 3.0 - 1.0))
                    .collect()
            })
            .collect();
        let (a, b) = (permanent(&m).unwrap(), naive(&m));
        assert!((a - b).norm() < 1e-9 * b.norm().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn constant_matrix_permanent() {
        let m = vec![vec![c(0.5); 5]; 5];
        assert!((permanent(&m).unwrap() - c(0.5f64.powi(5) * 120.0)).norm() < 1e-12);
    }

    #[test]
    fn oversized_permanent_rejected() {
        let m = vec![vec![c(1.0); 21]; 21];
        assert!(matches!(permanent(&m), Err(Error::Resource { .. })));
    }

    #[test]
    fn product_bound_is_rigorous() {
        let b = product_bound(&[(c(2.0), 0.1), (c(3.0), 0.2)]);
        assert!((b - (2.1 * 3.2 - 6.0)).abs() < 1e-12);
    }
}
