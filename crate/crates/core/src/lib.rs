//! Numerical laboratory for continuity equations with measure-valued data.
//!
//! The crate is organised bottom-up:
//!
//! - [`measures`]: particle measures on R^d, ensembles of them (measures on
//!   the space of probability measures), kernel density checks of the bound
//!   `E ν ≤ C L^d`, and a bounded dictionary metric for weak convergence.
//! - [`fields`]: Hamiltonian vector fields `b(x, p) = (p, c(x))`, including
//!   repulsive Coulomb forces with a singular set.
//! - [`flow`]: RK4 trajectories, flow maps over particle clouds, and the
//!   superposition solution `μ_t = ∫ δ_{X(t,x)} dμ(x)`.
//! - [`weakform`]: distributional residuals, an upwind finite-volume oracle
//!   for the density equation, and the stability-hypothesis statistics.
//! - [`quantum`]: split-step Schrödinger evolution, Wigner/Husimi
//!   transforms, and the semiclassical ε-sweep experiments.
//! - [`harness`]: configuration, experiment registry and result persistence.

pub mod error;
pub mod fields;
pub mod flow;
pub mod harness;
pub mod measures;
pub mod quantum;
pub mod weakform;

pub use error::{Error, Result};
