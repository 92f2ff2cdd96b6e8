//! Rank-one flows built by cutting and stacking, with exact Koopman
//! correlations and spectral estimates.
//!
//! Heights, offsets, spacers and times are [`Scalar`]s: exact elements of
//! ℚ(√2) unless a schedule opts into floats. Correlations of step functions
//! are evaluated by a memoized recursion over copy overlaps, never by
//! iterating the flow pointwise.

// `!(x < y)` is used on purpose so NaN fails the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod flow;
pub mod koopman;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use flow::{NamedSchedule, Schedule, ScheduleDoc, SpacerMap, StageParams, TowerStage};
pub use koopman::{CorrelationResult, StepFunction};
pub use scalar::{Rational, Scalar, ScalarMode};
pub use spectral::{AutocorrCurve, SpectralEstimate};
