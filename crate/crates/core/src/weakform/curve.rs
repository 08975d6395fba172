use std::sync::Arc;

use crate::measures::{weak_distance, Observable, ParticleMeasure, TestFunctionDictionary};
use crate::{Error, Result};

/// `t ↦ μ_t` sampled on a shared time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureCurve {
    times: Arc<[f64]>,
    slices: Vec<ParticleMeasure>,
    provenance: String,
    /// Mass dropped from the curve (e.g. trajectories that hit `S`).
    mass_deficit: f64,
}

impl MeasureCurve {
    pub fn new(times: Arc<[f64]>, slices: Vec<ParticleMeasure>, provenance: impl Into<String>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(Error::InvalidParameter(format!(
                "curve needs one slice per time ({} times, {} slices)",
                times.len(),
                slices.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("curve times must be increasing".into()));
        }
        let dim = slices[0].dim();
        if let Some(s) = slices.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: s.dim() });
        }
        Ok(Self { times, slices, provenance: provenance.into(), mass_deficit: 0.0 })
    }

    /// The constant curve `μ_t ≡ μ`.
    pub fn constant(times: Arc<[f64]>, mu: ParticleMeasure, provenance: impl Into<String>) -> Result<Self> {
        let slices = vec![mu; times.len()];
        Self::new(times, slices, provenance)
    }

    pub fn with_mass_deficit(mut self, deficit: f64) -> Self {
        self.mass_deficit = deficit;
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn shared_times(&self) -> Arc<[f64]> {
        self.times.clone()
    }

    pub fn slices(&self) -> &[ParticleMeasure] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &ParticleMeasure {
        &self.slices[k]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.slices[0].dim()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn mass_deficit(&self) -> f64 {
        self.mass_deficit
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// `t_k ↦ ∫φ dμ_{t_k}`.
    pub fn observe(&self, phi: &dyn Observable) -> Result<Vec<f64>> {
        self.slices.iter().map(|s| s.integrate_test(phi)).collect()
    }

    /// Largest deviation of the slice masses from the first slice.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.slices[0].total_mass();
        self.slices.iter().map(|s| (s.total_mass() - m0).abs()).fold(0.0, f64::max)
    }

    /// Index of the sample at time `t` (exact up to `1e-12` relative).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * self.horizon().abs().max(1.0);
        let k = self.times.partition_point(|&s| s < t - tol);
        (k < self.times.len() && (self.times[k] - t).abs() <= tol).then_some(k)
    }
}

/// `sup_t d(μ_t, ν_t)` over the times of `a` that also appear in `b`.
pub fn curve_sup_distance(a: &MeasureCurve, b: &MeasureCurve, dict: &TestFunctionDictionary) -> Result<f64> {
    let mut sup = 0.0f64;
    let mut matched = 0;
    for (k, &t) in a.times().iter().enumerate() {
        if let Some(j) = b.index_of(t) {
            sup = sup.max(weak_distance(a.slice(k), b.slice(j), dict)?);
            matched += 1;
        }
    }
    if matched == 0 {
        return Err(Error::IndexMismatch("curves share no sample times".into()));
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::BoxDomain;

    fn grid(n: usize) -> Arc<[f64]> {
        (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn construction_checks() {
        let mu = ParticleMeasure::dirac(&[0.0, 0.0]);
        assert!(MeasureCurve::new(grid(3), vec![mu.clone(); 2], "x").is_err());
        let c = MeasureCurve::constant(grid(3), mu, "x").unwrap();
        assert_eq!(c.mass_drift(), 0.0);
        assert_eq!(c.index_of(0.5), Some(1));
        assert_eq!(c.index_of(0.25), None);
    }

    #[test]
    fn sup_distance_on_common_times() {
        let dict = TestFunctionDictionary::default_for(&BoxDomain::symmetric(2, 1.0).unwrap()).unwrap();
        let a = MeasureCurve::constant(grid(5), ParticleMeasure::dirac(&[0.0, 0.0]), "a").unwrap();
        let b = MeasureCurve::constant(grid(3), ParticleMeasure::dirac(&[0.0, 0.0]), "b").unwrap();
        assert_eq!(curve_sup_distance(&a, &b, &dict).unwrap(), 0.0);
        let shifted: Arc<[f64]> = vec![0.1, 0.2].into();
        let c = MeasureCurve::constant(shifted, ParticleMeasure::dirac(&[0.0, 0.0]), "c").unwrap();
        assert!(curve_sup_distance(&b, &c, &dict).is_err());
    }
}
