//! Hamiltonian vector fields `b(x, p) = (p, c(x))` on phase space `R^{2n}`,
//! with `c = −∇U` and a closed singular set `S ⊂ R^n` off which `c` is
//! locally bounded.

mod field;
mod potential;
mod singular;
mod spec;

pub use field::{decay_integrand, PhaseSpaceField};
pub use potential::{coulomb_force, BoundedPart, Coulomb, Potential};
pub use singular::SingularSet;
pub use spec::{make_field, BoundedSpec, FieldSpec};
