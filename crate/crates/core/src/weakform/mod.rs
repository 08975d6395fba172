//! Weak-form residuals, the finite-volume oracle and the stability statistics.

mod curve;
mod fv;
mod report;
mod residual;
mod stats;

pub use curve::{curve_sup_distance, MeasureCurve};
pub use fv::{solve_functional_continuity, solve_transport, FvConfig, FvSolution};
pub use report::StabilityReport;
pub(crate) use report::fmt;
pub use residual::{weak_residual, weak_residual_with_margin, TimeBump, DEFAULT_MARGIN};
pub use stats::{
    decay_stat, limit_continuity_stat, space_tightness_stat, stability_gap, time_tightness_stat, total_variation,
    uniform_regularity_stat, CurveFamily, DecayStat, LimitContinuityStat, RegularityStat, TightnessStat,
};
