//! Experiment harness for rank-one flows: JSON specs in, deterministic JSON
//! reports and CSV plot data out.

// `!(x < y)` is used on purpose so NaN fails the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
pub mod family;
pub mod report;
pub mod spec;
pub mod times;

pub use experiments::run;
pub use report::{export_plotdata, Check, PlotData, Report};
pub use spec::{ExperimentKind, ExperimentSpec};
