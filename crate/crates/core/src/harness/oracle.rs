use std::f64::consts::PI;

use super::{ParticleFvLevel, ParticleFvSection, ResidualOrderSection, UniquenessSection};
use crate::fields::make_field;
use crate::flow::{flow_map, measure_flow, StepControl};
use crate::measures::{
    density_estimate, dirac_ensemble_from_samples, sampling, weak_distance, BoxDomain, Bump, GridDensity,
    ParticleMeasure, TestFunctionDictionary,
};
use crate::weakform::{solve_functional_continuity, weak_residual, FvConfig, MeasureCurve, TimeBump};
use crate::{Error, Result};

fn gaussian(center: &[f64], sigma: f64) -> impl Fn(&[f64]) -> f64 + '_ {
    let norm = (2.0 * PI * sigma * sigma).powf(-(center.len() as f64) / 2.0);
    move |z: &[f64]| {
        let r2: f64 = z.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
        norm * (-0.5 * r2 / (sigma * sigma)).exp()
    }
}

fn gaussian_cloud(center: &[f64], sigma: f64, per_axis: usize) -> Result<ParticleMeasure> {
    let dom = BoxDomain::new(
        center.iter().map(|c| c - 5.0 * sigma).collect(),
        center.iter().map(|c| c + 5.0 * sigma).collect(),
    )?;
    sampling::grid_quadrature(&dom, &vec![per_axis; center.len()], gaussian(center, sigma))?.normalized()
}

/// L¹ distance at `T` between the upwind solution on `cells × cells` and a
/// quadrature cloud (`particles_per_cell²` per cell) transported by the flow
/// and deposited with a Gaussian kernel one cell wide.
pub fn particle_fv_gap(s: &ParticleFvSection, cells: usize) -> Result<ParticleFvLevel> {
    let b = make_field(&s.field)?;
    if s.center.len() != b.dim() || s.domain.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), found: s.center.len() });
    }
    let d = b.dim();
    let rho = gaussian(&s.center, s.sigma);
    let w0 = GridDensity::from_fn(s.domain.clone(), vec![cells; d], &rho)?;
    let fv = solve_functional_continuity(&w0, &b, s.horizon, &FvConfig { samples: 2, ..FvConfig::default() })?;

    let cloud = sampling::grid_quadrature(&s.domain, &vec![cells * s.particles_per_cell; d], &rho)?;
    let ctrl = StepControl { samples: Some(2), ..StepControl::with_dt(s.dt) };
    let map = flow_map(&b, &cloud, s.horizon, &ctrl)?;
    let moved = map.pushforward_slice(1)?;
    let h = s.domain.width(0) / cells as f64;
    let deposit = density_estimate(&moved, &s.domain, &vec![cells; d], h)?;
    Ok(ParticleFvLevel {
        cells,
        particles: cloud.len(),
        fv_steps: fv.steps,
        l1_gap: fv.last().l1_distance(&deposit.density)?,
        fv_mass_defect: fv.mass_defect(),
    })
}

/// `|weak_residual|` of the superposition curve of a Gaussian quadrature
/// cloud, once per stored time grid in `s.samples`.
pub fn residual_order(s: &ResidualOrderSection) -> Result<Vec<(usize, f64)>> {
    let b = make_field(&s.field)?;
    let mu = gaussian_cloud(&s.center, s.sigma, s.per_axis)?;
    let phi = Bump::new(s.test_center.clone(), s.test_radius.clone())?;
    let psi = TimeBump::interior(s.horizon, s.time_fraction)?;
    s.samples
        .iter()
        .map(|&n| {
            let ctrl = StepControl { samples: Some(n), ..StepControl::with_dt(s.dt) };
            let curve = flow_map(&b, &mu, s.horizon, &ctrl)?.superpose(&mu)?;
            Ok((n, weak_residual(&curve, &b, &phi, &psi)?.abs()))
        })
        .collect()
}

/// The same Gaussian cloud flowed twice: as a superposition curve under
/// `s.first`, and as the expectation of its Dirac ensemble under `s.second`.
/// Returns the dictionary distance at every time the two grids share.
pub fn uniqueness_distances(s: &UniquenessSection) -> Result<Vec<(f64, f64)>> {
    let b = make_field(&s.field)?;
    let mu = gaussian_cloud(&s.center, s.sigma, s.per_axis)?;
    let a = flow_map(&b, &mu, s.horizon, &s.first)?.superpose(&mu)?;
    let ensemble = dirac_ensemble_from_samples(&mu)?;
    let mf = measure_flow(&b, &ensemble, s.horizon, &s.second)?;
    let slices = (0..mf.flow.times().len()).map(|k| mf.expectation_slice(k)).collect::<Result<Vec<_>>>()?;
    let c = MeasureCurve::new(mf.flow.shared_times(), slices, "dirac ensemble expectation")?;
    let dict = TestFunctionDictionary::default_for(&s.reference_box)?;
    let mut out = Vec::new();
    for (k, &t) in a.times().iter().enumerate() {
        if let Some(j) = c.index_of(t) {
            out.push((t, weak_distance(a.slice(k), c.slice(j), &dict)?));
        }
    }
    if out.is_empty() {
        return Err(Error::IndexMismatch("the two constructions share no output time".into()));
    }
    Ok(out)
}
