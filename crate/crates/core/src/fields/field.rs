use serde::{Deserialize, Serialize};

use super::{Potential, SingularSet};
use crate::{Error, Result};

/// Autonomous field `b(x, p) = (p, c(x))` on `R^{2n}` with `c = −∇U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceField {
    potential: Potential,
    singular: SingularSet,
}

impl PhaseSpaceField {
    pub fn new(potential: Potential) -> Self {
        let singular = potential.singular_set();
        Self { potential, singular }
    }

    /// Configuration-space dimension `n`.
    pub fn n(&self) -> usize {
        self.potential.n
    }

    /// Phase-space dimension `2n`.
    pub fn dim(&self) -> usize {
        2 * self.potential.n
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn singular_set(&self) -> &SingularSet {
        &self.singular
    }

    pub fn dist_to_singular(&self, x: &[f64]) -> f64 {
        self.singular.distance(x)
    }

    /// `c(x)` into `out`; errors on `S` or for non-finite values.
    pub fn force_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if !self.singular.is_empty() && self.singular.distance(x) == 0.0 {
            return Err(Error::SingularEvaluation { x: x.to_vec(), distance: 0.0 });
        }
        self.potential.force_into(x, out)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { location: x.to_vec(), what: "force".into() });
        }
        Ok(())
    }

    pub fn force(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n()];
        self.force_into(x, &mut out)?;
        Ok(out)
    }

    /// `b(z)` into `out`, with `z = (x, p)`.
    pub fn eval_into(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.n();
        if z.len() != 2 * n || out.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: z.len() });
        }
        let (x, p) = z.split_at(n);
        let (dx, dp) = out.split_at_mut(n);
        dx.copy_from_slice(p);
        self.force_into(x, dp)
    }

    pub fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(z, &mut out)?;
        Ok(out)
    }

    /// `H(x, p) = |p|²/2 + U(x)`.
    pub fn hamiltonian(&self, z: &[f64]) -> f64 {
        let (x, p) = z.split_at(self.n());
        0.5 * p.iter().map(|v| v * v).sum::<f64>() + self.potential.value(x)
    }

    /// Upper bound for `sup |c|` over `{dist(·, S) ≥ r} ∩ B_R`.
    pub fn local_bound(&self, r: f64, radius: f64) -> f64 {
        self.potential.local_bound(r, radius)
    }

    /// `1 / (dist(x, S)^β + δ)`, with `β > 1`, `δ > 0`; zero when `S = ∅`.
    pub fn decay_integrand(&self, x: &[f64], beta: f64, delta: f64) -> Result<f64> {
        decay_integrand(&self.singular, x, beta, delta)
    }
}

/// `1 / (dist(x, S)^β + δ)` (the integrand of the decay hypothesis).
pub fn decay_integrand(singular: &SingularSet, x: &[f64], beta: f64, delta: f64) -> Result<f64> {
    if !(beta > 1.0) {
        return Err(Error::InvalidParameter(format!("decay exponent must exceed 1, got {beta}")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("decay offset must be positive, got {delta}")));
    }
    let d = singular.distance(x);
    Ok(if d.is_infinite() { 0.0 } else { 1.0 / (d.powf(beta) + delta) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Coulomb;

    fn coulomb_1d() -> PhaseSpaceField {
        let s = SingularSet::points(vec![vec![0.0]]).unwrap();
        PhaseSpaceField::new(Potential::coulomb(1, Coulomb::new(1.0, s).unwrap()))
    }

    #[test]
    fn free_and_harmonic_fields() {
        let free = PhaseSpaceField::new(Potential::zero(2));
        assert_eq!(free.eval(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![3.0, 4.0, 0.0, 0.0]);
        let osc = PhaseSpaceField::new(Potential::harmonic(1, 1.0));
        assert_eq!(osc.eval(&[1.0, 0.0]).unwrap(), vec![0.0, -1.0]);
    }

    #[test]
    fn coulomb_field_and_singular_error() {
        let b = coulomb_1d();
        let v = b.eval(&[2.0, 0.3]).unwrap();
        assert_eq!(v[0], 0.3);
        assert!((v[1] - 0.25).abs() < 1e-15);
        assert!(matches!(b.eval(&[0.0, 1.0]), Err(Error::SingularEvaluation { .. })));
    }

    #[test]
    fn decay_integrand_cases() {
        let b = coulomb_1d();
        assert!((b.decay_integrand(&[0.0], 2.0, 0.1).unwrap() - 10.0).abs() < 1e-12);
        assert!((b.decay_integrand(&[2.0], 2.0, 1.0).unwrap() - 0.2).abs() < 1e-15);
        assert!((b.decay_integrand(&[1.0], 3.7, 1e-14).unwrap() - 1.0).abs() < 1e-12);
        assert!(b.decay_integrand(&[1.0], 1.0, 0.1).is_err());
        assert!(b.decay_integrand(&[1.0], 2.0, 0.0).is_err());
        let free = PhaseSpaceField::new(Potential::zero(1));
        assert_eq!(free.decay_integrand(&[0.0], 2.0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn hamiltonian_of_coulomb() {
        let b = coulomb_1d();
        assert!((b.hamiltonian(&[1.0, -0.5]) - 1.125).abs() < 1e-15);
    }
}
