//! Koopman matrix coefficients `⟨U_T(t)f, g⟩` of step functions, where
//! `(U_T(t)f)(y) = f(y - t)` in tower coordinates: the flow moves points up.

mod composite;
mod correlate;
mod engine;
mod step;
mod weak_limit;

pub use composite::{
    component_correlate, component_correlate_with, direct_sum_correlate, permanent, product_correlate,
    sym_tensor_correlate, FockComponent, ProductFactor, MAX_PERMANENT,
};
pub use correlate::{
    correlate, correlate_family, correlate_with, inner_product, m_correlate, m_correlate_family, m_correlate_with,
    select_stage, CorrelateOptions, CorrelationResult,
};
pub use step::{lift, lift_guarded, reflect, StepFunction};
pub use weak_limit::{weak_limit_probe, ProbeTime, WeakLimitReport, WeakLimitTarget, WeakLimitTerm};
