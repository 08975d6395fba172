//! Finite measures on R^d as weighted particle clouds, measures on the space
//! of probability measures as weighted ensembles of such clouds, and the
//! numerical checks built on top of them.

pub(crate) mod dictionary;
mod distance;
mod domain;
mod ensemble;
mod grid;
mod kde;
mod particle;
pub mod sampling;

pub use dictionary::{
    bump_profile_integral, Bump, FnObservable, Observable, TestFunction, TestFunctionDictionary,
};
pub use distance::weak_distance;
pub use domain::BoxDomain;
pub use ensemble::{
    check_regular, dirac_ensemble_from_grid, dirac_ensemble_from_samples, product_ensemble, product_ensemble_at,
    EnsembleMember, MeasureEnsemble, RegularityReport,
};
pub use grid::GridDensity;
pub use kde::{
    check_density_bound, default_bandwidth, density_estimate, mean_nearest_neighbor_spacing,
    DensityBoundReport, DensityEstimate, DEFAULT_SLACK,
};
pub use particle::ParticleMeasure;
