//! Seeded particle constructors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BoxDomain, ParticleMeasure};
use crate::{Error, Result};

/// The generator used everywhere a seed is taken.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` i.i.d. uniform points in `domain`, equal weights `1/n`.
pub fn uniform_iid(domain: &BoxDomain, n: usize, seed: u64) -> Result<ParticleMeasure> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let mut r = rng(seed);
    let d = domain.dim();
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        for a in 0..d {
            coords.push(r.gen_range(domain.lo[a]..domain.hi[a]));
        }
    }
    ParticleMeasure::uniform(d, coords)
}

/// Jittered-lattice sample: one uniform point in every cell of a
/// `per_axis[0] × … ` partition of `domain`, equal weights.
pub fn uniform_stratified(domain: &BoxDomain, per_axis: &[usize], seed: u64) -> Result<ParticleMeasure> {
    let d = domain.dim();
    if per_axis.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: per_axis.len() });
    }
    if per_axis.contains(&0) {
        return Err(Error::InvalidParameter("strata per axis must be positive".into()));
    }
    let mut r = rng(seed);
    let n: usize = per_axis.iter().product();
    let widths: Vec<f64> = (0..d).map(|a| domain.width(a) / per_axis[a] as f64).collect();
    let mut coords = Vec::with_capacity(n * d);
    for flat in 0..n {
        let mut rem = flat;
        let mut cell = vec![0usize; d];
        for a in (0..d).rev() {
            cell[a] = rem % per_axis[a];
            rem /= per_axis[a];
        }
        for a in 0..d {
            let u: f64 = r.gen();
            coords.push(domain.lo[a] + (cell[a] as f64 + u) * widths[a]);
        }
    }
    ParticleMeasure::uniform(d, coords)
}

/// Cell centers of a regular partition, weighted by `density(center) · cell volume`.
pub fn grid_quadrature<F: Fn(&[f64]) -> f64>(
    domain: &BoxDomain,
    per_axis: &[usize],
    density: F,
) -> Result<ParticleMeasure> {
    let grid = super::GridDensity::from_fn(domain.clone(), per_axis.to_vec(), density)?;
    let vol = grid.cell_volume();
    let mut coords = Vec::with_capacity(grid.len() * grid.dim());
    let mut weights = Vec::with_capacity(grid.len());
    for (i, v) in grid.values().iter().enumerate() {
        coords.extend(grid.cell_center(i));
        weights.push(v * vol);
    }
    ParticleMeasure::new(grid.dim(), coords, weights)
}
