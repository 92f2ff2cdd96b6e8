use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::curve::AutocorrCurve;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Taper {
    /// `w(t) = exp(-(t/σ)²/2)`.
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub taper: Taper,
    pub width: f64,
}

/// A nonnegative density sampled on the uniform grid
/// `λ_i = lambda_min + i·(lambda_max - lambda_min)/(len - 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub density: Vec<f64>,
    /// `Σ density_i · Δλ`.
    pub mass: f64,
    pub window: Window,
}

impl SpectralEstimate {
    pub fn step(&self) -> f64 {
        (self.lambda_max - self.lambda_min) / (self.density.len() - 1) as f64
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.lambda_min + i as f64 * self.step()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        (0..self.density.len()).map(|i| self.lambda(i)).collect()
    }

    /// `(λ_i, density_i)` rows for plotting.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.density.iter().enumerate().map(|(i, d)| (self.lambda(i), *d))
    }

    /// Mass carried by grid points with `lo <= λ <= hi`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        let h = self.step();
        self.points().filter(|(l, _)| *l >= lo && *l <= hi).map(|(_, d)| d * h).sum()
    }

    /// Linear interpolation, zero outside the window.
    pub fn value_at(&self, lambda: f64) -> f64 {
        let h = self.step();
        let x = (lambda - self.lambda_min) / h;
        let last = (self.density.len() - 1) as f64;
        let tol = 1e-9;
        if x < -tol || x > last + tol {
            return 0.0;
        }
        let x = x.clamp(0.0, last);
        let i = (x.floor() as usize).min(self.density.len() - 2);
        let frac = x - i as f64;
        self.density[i] * (1.0 - frac) + self.density[i + 1] * frac
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.density.len() == other.density.len()
            && self.lambda_min == other.lambda_min
            && self.lambda_max == other.lambda_max
    }

    fn resampled(&self, lo: f64, hi: f64, len: usize) -> Vec<f64> {
        let h = (hi - lo) / (len - 1) as f64;
        (0..len).map(|i| self.value_at(lo + i as f64 * h)).collect()
    }
}

/// Union window at the finer of the steps, shared by every estimate.
fn common_grid(ests: &[&SpectralEstimate]) -> (f64, f64, usize) {
    let lo = ests.iter().map(|e| e.lambda_min).fold(f64::INFINITY, f64::min);
    let hi = ests.iter().map(|e| e.lambda_max).fold(f64::NEG_INFINITY, f64::max);
    let h = ests.iter().map(|e| e.step()).fold(f64::INFINITY, f64::min);
    let len = ((hi - lo) / h - 1e-9).ceil() as usize + 1;
    (lo, hi, len.max(2))
}

/// Tapered Fourier inversion of an autocorrelation curve on `grid` points
/// of `[-Λ, Λ]`. Negative lobes are clipped to zero and the total mass is
/// rescaled to `c(0)`.
pub fn bochner_density(
    curve: &AutocorrCurve,
    lambda_max: f64,
    grid: usize,
    taper_width: f64,
) -> Result<SpectralEstimate> {
    if !(lambda_max > 0.0) || grid < 2 {
        return Err(Error::config(format!("need Λ > 0 and at least 2 grid points, got {lambda_max}, {grid}")));
    }
    if !(taper_width > 0.0) || taper_width > curve.t_max() {
        return Err(Error::config(format!("taper width {taper_width} must lie in (0, T_max = {}]", curve.t_max())));
    }
    curve.check_hermitian()?;
    let weighted: Vec<(f64, Complex64)> = (0..curve.len())
        .map(|i| {
            let t = curve.time(i);
            let w = (-0.5 * (t / taper_width).powi(2)).exp();
            (t, curve.values[i] * w)
        })
        .collect();
    let step = 2.0 * lambda_max / (grid - 1) as f64;
    let mut density: Vec<f64> = (0..grid)
        .map(|j| {
            let lambda = -lambda_max + j as f64 * step;
            let s: f64 =
                weighted.iter().map(|(t, c)| (c * Complex64::from_polar(1.0, -2.0 * PI * lambda * t)).re).sum();
            (curve.dt * s).max(0.0)
        })
        .collect();
    let raw: f64 = density.iter().sum::<f64>() * step;
    let c0 = curve.at_zero().re.max(0.0);
    if raw > 0.0 {
        let k = c0 / raw;
        density.iter_mut().for_each(|d| *d *= k);
    }
    let mass = density.iter().sum::<f64>() * step;
    Ok(SpectralEstimate {
        lambda_min: -lambda_max,
        lambda_max,
        density,
        mass,
        window: Window { taper: Taper::Gaussian, width: taper_width },
    })
}

/// `σ_t(A) = σ(t·A)`: the density `t·ρ(t·λ)`, read on the grid `λ_i / t`.
pub fn dilate(est: &SpectralEstimate, t: &Scalar) -> Result<SpectralEstimate> {
    if t.signum() <= 0 {
        return Err(Error::invalid(format!("dilation factor must be positive, got {t}")));
    }
    let t = t.to_f64();
    Ok(SpectralEstimate {
        lambda_min: est.lambda_min / t,
        lambda_max: est.lambda_max / t,
        density: est.density.iter().map(|d| d * t).collect(),
        mass: est.mass,
        window: est.window.clone(),
    })
}

/// `Σ_j 2^{-j} σ_j` for `j = 1, 2, …` on the common grid.
pub fn aggregate(ests: &[SpectralEstimate]) -> Result<SpectralEstimate> {
    let first = ests.first().ok_or_else(|| Error::invalid("nothing to aggregate"))?;
    let refs: Vec<&SpectralEstimate> = ests.iter().collect();
    let (lo, hi, len) = if ests.iter().all(|e| e.same_grid(first)) {
        (first.lambda_min, first.lambda_max, first.density.len())
    } else {
        common_grid(&refs)
    };
    let mut density = vec![0.0; len];
    let mut mass = 0.0;
    let mut w = 1.0;
    for e in ests {
        w *= 0.5;
        let vals = if e.lambda_min == lo && e.lambda_max == hi && e.density.len() == len {
            e.density.clone()
        } else {
            e.resampled(lo, hi, len)
        };
        density.iter_mut().zip(vals).for_each(|(d, v)| *d += w * v);
        mass += w * e.mass;
    }
    Ok(SpectralEstimate { lambda_min: lo, lambda_max: hi, density, mass, window: first.window.clone() })
}

/// Hellinger affinity `Σ √(p_i q_i)` of the two estimates normalized to
/// mass one on a common grid. It is 1 for identical estimates and 0 for
/// disjoint supports.
pub fn affinity(a: &SpectralEstimate, b: &SpectralEstimate) -> Result<f64> {
    let (pa, pb) = if a.same_grid(b) {
        (a.density.clone(), b.density.clone())
    } else {
        let (lo, hi, len) = common_grid(&[a, b]);
        (a.resampled(lo, hi, len), b.resampled(lo, hi, len))
    };
    let (sa, sb): (f64, f64) = (pa.iter().sum(), pb.iter().sum());
    if !(sa > 0.0) || !(sb > 0.0) {
        return Err(Error::Degenerate("affinity of an estimate with zero mass".into()));
    }
    let cross: f64 = pa.iter().zip(&pb).map(|(p, q)| (p * q).sqrt()).sum();
    Ok((cross / (sa * sb).sqrt()).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed(lo: f64, hi: f64, len: usize, on: impl Fn(f64) -> bool) -> SpectralEstimate {
        let step = (hi - lo) / (len - 1) as f64;
        let density: Vec<f64> = (0..len).map(|i| if on(lo + i as f64 * step) { 1.0 } else { 0.0 }).collect();
        let mass = density.iter().sum::<f64>() * step;
        SpectralEstimate {
            lambda_min: lo,
            lambda_max: hi,
            density,
            mass,
            window: Window { taper: Taper::Gaussian, width: 1.0 },
        }
    }

    #[test]
    fn taper_wider_than_curve_is_rejected() {
        let c = AutocorrCurve::from_fn(0.1, 2.0, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(bochner_density(&c, 1.0, 11, 3.0), Err(Error::Config(_))));
    }

    #[test]
    fn mass_is_renormalized_to_c0() {
        let c = AutocorrCurve::from_fn(0.05, 8.0, |t| Complex64::new(2.0 * (-PI * t * t).exp(), 0.0)).unwrap();
        let e = bochner_density(&c, 4.0, 401, 8.0).unwrap();
        assert!((e.mass - 2.0).abs() < 1e-9);
        assert!(e.density.iter().all(|d| *d >= 0.0));
    }

    #[test]
    fn dilation_by_one_is_identity() {
        let e = boxed(-1.0, 1.0, 21, |l| l.abs() < 0.5);
        assert_eq!(dilate(&e, &Scalar::one()).unwrap(), e);
        assert!(dilate(&e, &Scalar::zero()).is_err());
    }

    #[test]
    fn affinity_axioms() {
        let a = boxed(-1.0, 1.0, 21, |l| l < 0.0);
        let b = boxed(-1.0, 1.0, 21, |l| l > 0.0);
        assert_eq!(affinity(&a, &a).unwrap(), 1.0);
        assert_eq!(affinity(&a, &b).unwrap(), 0.0);
        assert_eq!(affinity(&a, &b).unwrap(), affinity(&b, &a).unwrap());
        let z = boxed(-1.0, 1.0, 21, |_| false);
        assert!(matches!(affinity(&a, &z), Err(Error::Degenerate(_))));
    }

    #[test]
    fn aggregate_halves_weights() {
        let a = boxed(-1.0, 1.0, 21, |_| true);
        let g = aggregate(&[a.clone(), a.clone()]).unwrap();
        assert!((g.mass - 0.75 * a.mass).abs() < 1e-12);
        assert_eq!(g.density[3], 0.75);
    }

    #[test]
    fn interpolation_between_grids() {
        let a = boxed(-1.0, 1.0, 3, |_| true);
        assert_eq!(a.value_at(0.25), 1.0);
        assert_eq!(a.value_at(1.5), 0.0);
    }
}
