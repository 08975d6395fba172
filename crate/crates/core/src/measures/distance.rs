use super::{ParticleMeasure, TestFunctionDictionary};
use crate::{Error, Result};

/// Bounded dictionary metric
/// `d(μ, ν) = Σ_k 2^{-k} min(1, |∫φ_k dμ − ∫φ_k dν| / ‖φ_k‖_∞)`, `k = 1, 2, …`.
///
/// Symmetric, satisfies the triangle inequality and takes values in `[0, 1)`.
pub fn weak_distance(
    mu: &ParticleMeasure,
    nu: &ParticleMeasure,
    dict: &TestFunctionDictionary,
) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    if dict.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: dict.dim() });
    }
    let mut total = 0.0;
    let mut scale = 0.5;
    for (phi, sup) in dict.functions().iter().zip(dict.sup_bounds()) {
        let a = mu.integrate(|x| phi.value(x));
        let b = nu.integrate(|x| phi.value(x));
        total += scale * ((a - b).abs() / sup).min(1.0);
        scale *= 0.5;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::BoxDomain;

    fn unit_dict() -> TestFunctionDictionary {
        TestFunctionDictionary::default_for(&BoxDomain::symmetric(2, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn identical_measures_have_zero_distance() {
        let mu = ParticleMeasure::from_points(2, &[vec![0.1, 0.2], vec![-0.4, 0.3]], vec![0.4, 0.6])
            .unwrap();
        assert_eq!(weak_distance(&mu, &mu, &unit_dict()).unwrap(), 0.0);
    }

    #[test]
    fn shrinking_translates_decrease_strictly() {
        let dict = unit_dict();
        let zero = ParticleMeasure::dirac(&[0.0, 0.0]);
        let ds: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|n| weak_distance(&ParticleMeasure::dirac(&[1.0 / n, 0.0]), &zero, &dict).unwrap())
            .collect();
        for w in ds.windows(2) {
            assert!(w[1] < w[0], "{ds:?}");
        }
        assert!(ds[4] < 0.2 * ds[0], "{ds:?}");
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let a = ParticleMeasure::dirac(&[0.0, 0.0]);
        let b = ParticleMeasure::dirac(&[0.0]);
        assert!(weak_distance(&a, &b, &unit_dict()).is_err());
    }
}
