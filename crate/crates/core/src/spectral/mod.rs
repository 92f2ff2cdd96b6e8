//! Spectral measures of test vectors, estimated from sampled
//! autocorrelation curves by tapered Fourier inversion.

mod curve;
mod estimate;

pub use curve::{autocorr_curve, autocorr_curve_with, AutocorrCurve};
pub use estimate::{affinity, aggregate, bochner_density, dilate, SpectralEstimate, Taper, Window};
