//! Semiclassical Schrödinger evolution, Wigner/Husimi transforms and the
//! ε-sweep experiments (one space dimension).

mod evolve;
mod experiment;
mod transforms;
mod wave;
mod wkb;

pub use evolve::{evolve, evolve_sampled, SplitStep};
pub use experiment::{
    alpha1_experiment, decay_passes, decay_statistics, default_eps_list, hypothesis_statistics, semiclassical_experiment, Alpha1Config, Alpha1Result,
    CellFailure, CellGrid, DistanceRow, EpsSummary, HypothesisConfig, HypothesisOutcome, MomentumProfileRow,
    PhaseSample, PositionSample, QuantumSettings, SemiclassicalConfig, SemiclassicalResult, TransformDiagnostics,
};
pub use transforms::{
    dual_distance, husimi, husimi_on, husimi_to_measure, momentum_density, momentum_density_at,
    phase_space_dictionary, wigner, wigner_identity_errors, wigner_marginal_errors, PhaseBox, PhaseSpaceDensity, TransformKind,
};
pub use wave::{Grid1d, WaveFunction, BOUNDARY_TOL};
pub use wkb::{wkb_initial, Envelope, WkbParams};
