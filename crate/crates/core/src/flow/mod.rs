//! Trajectories of `ż = b(z)`, flow maps of particle clouds, superposition
//! curves and the numerical RLF checks.

mod check;
mod io;
mod map;
mod residual;
mod trajectory;

pub use check::{check_rlf, five_slices, RlfCheckConfig, RlfReport, SliceDensity};
pub use io::{read_bundle, write_bundle, BundleManifest};
pub use map::{flow_map, measure_flow, FlowMap, MeasureFlow};
pub use residual::{cumulative_simpson, ode_residual};
pub use trajectory::{integrate_trajectory, uniform_times, StepControl, Trajectory, TrajectoryStatus};
