use serde::{Deserialize, Serialize};

use super::kde::{check_density_bound, default_bandwidth, density_estimate, DEFAULT_SLACK};
use super::{BoxDomain, GridDensity, ParticleMeasure};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub weight: f64,
    pub measure: ParticleMeasure,
}

/// Weighted family of particle measures: a discrete measure on `P(R^d)`.
///
/// JSON form: `{"dim": d, "members": [{"weight": w, "measure": {..}}, ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleJson", into = "EnsembleJson")]
pub struct MeasureEnsemble {
    dim: usize,
    members: Vec<EnsembleMember>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleJson {
    dim: usize,
    members: Vec<EnsembleMember>,
}

impl TryFrom<EnsembleJson> for MeasureEnsemble {
    type Error = Error;

    fn try_from(json: EnsembleJson) -> Result<Self> {
        Self::new(json.dim, json.members)
    }
}

impl From<MeasureEnsemble> for EnsembleJson {
    fn from(e: MeasureEnsemble) -> Self {
        Self { dim: e.dim, members: e.members }
    }
}

impl MeasureEnsemble {
    pub fn new(dim: usize, members: Vec<EnsembleMember>) -> Result<Self> {
        for m in &members {
            if m.measure.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.measure.dim() });
            }
            if !(m.weight.is_finite() && m.weight >= 0.0) {
                return Err(Error::InvalidMeasure(format!("ensemble weight {}", m.weight)));
            }
        }
        Ok(Self { dim, members })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Total mass of `ν`, i.e. the sum of ensemble weights.
    pub fn total_weight(&self) -> f64 {
        self.members.iter().map(|m| m.weight).sum()
    }

    /// The expectation `Eν`: each member particle enters with weight
    /// `ensemble weight × particle weight`.
    pub fn expectation(&self) -> Result<ParticleMeasure> {
        if self.members.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let n: usize = self.members.iter().map(|m| m.measure.len()).sum();
        let mut coords = Vec::with_capacity(n * self.dim);
        let mut weights = Vec::with_capacity(n);
        for m in &self.members {
            coords.extend_from_slice(m.measure.coords());
            weights.extend(m.measure.weights().iter().map(|w| m.weight * w));
        }
        ParticleMeasure::new(self.dim, coords, weights)
    }

    /// `a·self + b·other` as a measure on `P(R^d)` (members concatenated).
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let members = self
            .members
            .iter()
            .map(|m| (a, m))
            .chain(other.members.iter().map(|m| (b, m)))
            .map(|(s, m)| EnsembleMember { weight: s * m.weight, measure: m.measure.clone() })
            .collect();
        Self::new(self.dim, members)
    }
}

/// Law of `x ↦ δ_x` under `ρ L^d`, discretized at the cell centers of `rho`:
/// one Dirac member per cell of positive density, weighted `ρ · cell volume`.
pub fn dirac_ensemble_from_grid(rho: &GridDensity) -> Result<MeasureEnsemble> {
    let vol = rho.cell_volume();
    let members: Vec<EnsembleMember> = rho
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, v)| EnsembleMember { weight: v * vol, measure: ParticleMeasure::dirac(&rho.cell_center(i)) })
        .collect();
    if members.is_empty() {
        return Err(Error::ZeroMass);
    }
    MeasureEnsemble::new(rho.dim(), members)
}

/// Law of `x ↦ δ_x` under a sampled `ρ`: one Dirac member per sample,
/// weighted by the sample weight.
pub fn dirac_ensemble_from_samples(samples: &ParticleMeasure) -> Result<MeasureEnsemble> {
    if samples.total_mass() <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let members = samples
        .points()
        .zip(samples.weights())
        .filter(|(_, w)| **w > 0.0)
        .map(|(x, w)| EnsembleMember { weight: *w, measure: ParticleMeasure::dirac(x) })
        .collect();
    MeasureEnsemble::new(samples.dim(), members)
}

/// Law of `x ↦ δ_x ⊗ γ` under `ρ L^n`: member `j` is `γ` placed in the fibre
/// `{x_j} × R^n` of phase space `R^{2n}`.
///
/// When `gamma_bound` is given, `γ ≤ C L^n` is checked with the default KDE
/// and a warning is logged if it fails.
pub fn product_ensemble(
    rho: &GridDensity,
    gamma: &ParticleMeasure,
    gamma_bound: Option<f64>,
) -> Result<MeasureEnsemble> {
    let vol = rho.cell_volume();
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (i, v) in rho.values().iter().enumerate() {
        if *v > 0.0 {
            coords.extend(rho.cell_center(i));
            weights.push(v * vol);
        }
    }
    if weights.is_empty() {
        return Err(Error::ZeroMass);
    }
    product_ensemble_at(&ParticleMeasure::new(rho.dim(), coords, weights)?, gamma, gamma_bound)
}

/// Members `δ_{x_j} ⊗ γ` with ensemble weights taken from the cloud `xs`.
pub fn product_ensemble_at(
    xs: &ParticleMeasure,
    gamma: &ParticleMeasure,
    gamma_bound: Option<f64>,
) -> Result<MeasureEnsemble> {
    let n = xs.dim();
    if gamma.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: gamma.dim() });
    }
    if let Some(bound) = gamma_bound {
        warn_if_unbounded(gamma, bound);
    }
    let mut members = Vec::new();
    for (x, w) in xs.points().zip(xs.weights()) {
        if *w <= 0.0 {
            continue;
        }
        let mut coords = Vec::with_capacity(2 * n * gamma.len());
        for p in gamma.points() {
            coords.extend_from_slice(x);
            coords.extend_from_slice(p);
        }
        members.push(EnsembleMember { weight: *w, measure: ParticleMeasure::new(2 * n, coords, gamma.weights().to_vec())? });
    }
    if members.is_empty() {
        return Err(Error::ZeroMass);
    }
    MeasureEnsemble::new(2 * n, members)
}

fn warn_if_unbounded(gamma: &ParticleMeasure, bound: f64) {
    let Ok(h) = default_bandwidth(gamma) else {
        log::warn!("cannot check γ ≤ C L^n: fewer than two particles");
        return;
    };
    let (lo, hi) = gamma.bounding_box().expect("γ has particles");
    let Ok(domain) = BoxDomain::new(
        lo.iter().map(|v| v - 4.0 * h).collect(),
        hi.iter().map(|v| v + 4.0 * h).collect(),
    ) else {
        return;
    };
    let cells = vec![64; gamma.dim()];
    match density_estimate(gamma, &domain, &cells, h)
        .and_then(|est| check_density_bound(&est.density, bound, DEFAULT_SLACK))
    {
        Ok(r) if !r.pass => log::warn!(
            "γ exceeds the declared bound: KDE max {:.4} > {:.4}",
            r.max_density,
            r.threshold
        ),
        Ok(_) => {}
        Err(e) => log::warn!("γ bound check failed: {e}"),
    }
}

/// Result of the regularity check `Eν ≤ C L^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub max_density: f64,
    pub bound: f64,
    pub threshold: f64,
    pub pass: bool,
    pub bandwidth: f64,
    pub spill: f64,
    /// Set when more than `1e-6` of the mass lies outside the grid box.
    pub spill_warning: bool,
}

/// Expectation, then KDE on the grid, then the density bound.
pub fn check_regular(
    nu: &MeasureEnsemble,
    bound: f64,
    domain: &BoxDomain,
    cells_per_axis: &[usize],
    bandwidth: f64,
    slack: f64,
) -> Result<RegularityReport> {
    let e = nu.expectation()?;
    let est = density_estimate(&e, domain, cells_per_axis, bandwidth)?;
    let r = check_density_bound(&est.density, bound, slack)?;
    Ok(RegularityReport {
        max_density: r.max_density,
        bound,
        threshold: r.threshold,
        pass: r.pass,
        bandwidth,
        spill: est.spill,
        spill_warning: est.spill > 1e-6 * e.total_mass().max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> BoxDomain {
        BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn single_member_expectation_is_the_member() {
        let mu = ParticleMeasure::from_points(1, &[vec![0.2], vec![0.7]], vec![0.25, 0.75]).unwrap();
        let nu = MeasureEnsemble::new(1, vec![EnsembleMember { weight: 1.0, measure: mu.clone() }])
            .unwrap();
        assert_eq!(nu.expectation().unwrap(), mu);
    }

    #[test]
    fn empty_ensemble_has_no_expectation() {
        let nu = MeasureEnsemble::new(2, vec![]).unwrap();
        assert!(matches!(nu.expectation(), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn dirac_grid_construction() {
        let rho = GridDensity::from_fn(unit_square(), vec![10, 10], |_| 1.0).unwrap();
        let nu = dirac_ensemble_from_grid(&rho).unwrap();
        assert_eq!(nu.len(), 100);
        for m in nu.members() {
            assert!((m.weight - 0.01).abs() < 1e-15);
            assert_eq!(m.measure.len(), 1);
        }
        let c = nu.members()[11].measure.point(0);
        assert!((c[0] - 0.15).abs() < 1e-15 && (c[1] - 0.15).abs() < 1e-15);
        let zero = GridDensity::zeros(unit_square(), vec![3, 3]).unwrap();
        assert!(matches!(dirac_ensemble_from_grid(&zero), Err(Error::ZeroMass)));
    }

    #[test]
    fn product_with_dirac_gamma_is_diagonal_dirac_ensemble() {
        let rho = GridDensity::from_fn(BoxDomain::new(vec![0.0], vec![1.0]).unwrap(), vec![4], |_| 1.0)
            .unwrap();
        let gamma = ParticleMeasure::dirac(&[0.7]);
        let nu = product_ensemble(&rho, &gamma, None).unwrap();
        assert_eq!(nu.dim(), 2);
        assert_eq!(nu.len(), 4);
        assert_eq!(nu.members()[2].measure.point(0), &[0.625, 0.7]);
        assert!(product_ensemble(&rho, &ParticleMeasure::dirac(&[0.0, 0.0]), None).is_err());
    }

    #[test]
    fn atomic_ensemble_is_not_regular() {
        let atom = MeasureEnsemble::new(
            2,
            (0..10)
                .map(|_| EnsembleMember { weight: 0.1, measure: ParticleMeasure::dirac(&[0.5, 0.5]) })
                .collect(),
        )
        .unwrap();
        // shrinking bandwidth: max density grows like 1/h², so any fixed C fails eventually
        let dom = unit_square();
        let mut last = 0.0;
        for h in [0.1, 0.03, 0.01] {
            let r = check_regular(&atom, 4.0, &dom, &[200, 200], h, DEFAULT_SLACK).unwrap();
            assert!(r.max_density > last);
            last = r.max_density;
        }
        assert!(!check_regular(&atom, 4.0, &dom, &[200, 200], 0.01, DEFAULT_SLACK).unwrap().pass);
    }

    #[test]
    fn spill_warning_for_mass_outside_grid() {
        let nu = dirac_ensemble_from_samples(
            &ParticleMeasure::from_points(2, &[vec![0.5, 0.5], vec![3.0, 3.0]], vec![0.5, 0.5]).unwrap(),
        )
        .unwrap();
        let r = check_regular(&nu, 100.0, &unit_square(), &[20, 20], 0.05, DEFAULT_SLACK).unwrap();
        assert!(r.spill_warning);
        assert!((r.spill - 0.5).abs() < 1e-6);
    }
}
