//! Cutting-and-stacking schedules and their exact tower geometry.

mod document;
mod finiteness;
mod named;
mod overlap;
mod schedule;
mod spacer;

pub use document::{ScheduleBody, ScheduleDoc};
pub use finiteness::{criterion_term, finiteness_test, partial_sums, Finiteness};
pub use named::{asymmetric_stage, NamedSchedule, Thm44Class, Thm44Params, Thm44Slot};
pub use overlap::{overlap_pairs, overlap_pairs_guarded, overlap_tuples, DEFAULT_BLOWUP_GUARD};
pub(crate) use overlap::{shift_key, visit_tuples, FastHash, ShiftKey};
pub use schedule::{symmetrize, symmetrize_params, Schedule, StageParams, TowerStage, DEFAULT_DIGIT_BUDGET};
pub use spacer::{SpacerLayout, SpacerMap};
