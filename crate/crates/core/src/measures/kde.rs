//! Gaussian kernel density surrogates for bounds of the form `μ ≤ C L^d`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{BoxDomain, GridDensity, ParticleMeasure};
use crate::{Error, Result};

/// Relative slack absorbed by the KDE bias in density-bound checks.
pub const DEFAULT_SLACK: f64 = 0.1;

// Kernel mass beyond this many bandwidths is ~1e-12 and is dropped.
const KERNEL_CUTOFF: f64 = 7.0;

/// A KDE on a grid together with the mass that fell outside its box.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub density: GridDensity,
    /// `total mass − ∫ density`, i.e. kernel mass outside the grid box.
    pub spill: f64,
}

/// Cell-averaged Gaussian KDE: every particle spreads its weight over the
/// grid with the exact cell integrals of an isotropic Gaussian of standard
/// deviation `bandwidth`, so the grid integral equals the total mass minus
/// what leaves the box.
pub fn density_estimate(
    mu: &ParticleMeasure,
    domain: &BoxDomain,
    cells_per_axis: &[usize],
    bandwidth: f64,
) -> Result<DensityEstimate> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if mu.dim() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: domain.dim() });
    }
    let mut grid = GridDensity::zeros(domain.clone(), cells_per_axis.to_vec())?;
    let d = mu.dim();
    let spacing: Vec<f64> = (0..d).map(|a| grid.spacing(a)).collect();
    let inv_vol = 1.0 / grid.cell_volume();
    let scale = 1.0 / (std::f64::consts::SQRT_2 * bandwidth);

    // per-axis window: first cell index and cell mass fractions
    let mut starts = vec![0usize; d];
    let mut fractions: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut idx = vec![0usize; d];

    for (x, &w) in mu.points().zip(mu.weights()) {
        if w == 0.0 {
            continue;
        }
        let mut empty = false;
        for a in 0..d {
            let n = cells_per_axis[a] as isize;
            let lo = domain.lo[a];
            let first = (((x[a] - KERNEL_CUTOFF * bandwidth - lo) / spacing[a]).floor() as isize).max(0);
            let last = (((x[a] + KERNEL_CUTOFF * bandwidth - lo) / spacing[a]).floor() as isize).min(n - 1);
            let f = &mut fractions[a];
            f.clear();
            if first > last {
                empty = true;
                break;
            }
            starts[a] = first as usize;
            let mut prev = libm::erf((lo + first as f64 * spacing[a] - x[a]) * scale);
            for k in first..=last {
                let next = libm::erf((lo + (k + 1) as f64 * spacing[a] - x[a]) * scale);
                f.push(0.5 * (next - prev));
                prev = next;
            }
        }
        if empty {
            continue;
        }
        // odometer over the tensor window
        idx.iter_mut().for_each(|k| *k = 0);
        let values = grid.values_mut();
        'outer: loop {
            let mut flat = 0usize;
            let mut mass = w * inv_vol;
            for a in 0..d {
                flat = flat * cells_per_axis[a] + starts[a] + idx[a];
                mass *= fractions[a][idx[a]];
            }
            values[flat] += mass;
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < fractions[a].len() {
                    continue 'outer;
                }
                idx[a] = 0;
            }
            break;
        }
    }
    let spill = (mu.total_mass() - grid.integral()).max(0.0);
    Ok(DensityEstimate { density: grid, spill })
}

/// Outcome of comparing a density against `C (1 + slack)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBoundReport {
    pub max_density: f64,
    pub bound: f64,
    pub slack: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub fn check_density_bound(rho: &GridDensity, bound: f64, slack: f64) -> Result<DensityBoundReport> {
    if !(bound > 0.0) || !(slack >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "density bound needs C > 0 and slack ≥ 0 (C = {bound}, slack = {slack})"
        )));
    }
    let max_density = rho.max_value();
    let threshold = bound * (1.0 + slack);
    Ok(DensityBoundReport { max_density, bound, slack, threshold, pass: max_density <= threshold })
}

/// Unweighted mean distance from each particle to its nearest other particle.
pub fn mean_nearest_neighbor_spacing(mu: &ParticleMeasure) -> Result<f64> {
    let n = mu.len();
    if n < 2 {
        return Err(Error::InvalidParameter("nearest-neighbour spacing needs two points".into()));
    }
    let d = mu.dim();
    let (lo, hi) = mu.bounding_box().expect("nonempty");
    let extent: f64 = (0..d).map(|a| (hi[a] - lo[a]).max(f64::MIN_POSITIVE)).product();
    let mut cell = (extent / n as f64).powf(1.0 / d as f64);
    if !(cell.is_finite() && cell > 0.0) {
        cell = 1.0;
    }
    let key = |x: &[f64]| -> Vec<i64> {
        x.iter().zip(&lo).map(|(v, l)| ((v - l) / cell).floor() as i64).collect()
    };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, x) in mu.points().enumerate() {
        buckets.entry(key(x)).or_default().push(i);
    }

    let mut total = 0.0;
    let mut offset = vec![0i64; d];
    for (i, x) in mu.points().enumerate() {
        let home = key(x);
        let mut best = f64::INFINITY;
        let mut ring = 0i64;
        loop {
            // visit the shell of cells at Chebyshev distance `ring`
            let side = 2 * ring + 1;
            let total_cells = (side as u64).pow(d as u32);
            for flat in 0..total_cells {
                let mut rem = flat;
                let mut on_shell = false;
                for o in offset.iter_mut() {
                    *o = (rem % side as u64) as i64 - ring;
                    rem /= side as u64;
                    on_shell |= o.abs() == ring;
                }
                if !on_shell {
                    continue;
                }
                let probe: Vec<i64> = home.iter().zip(&offset).map(|(h, o)| h + o).collect();
                if let Some(list) = buckets.get(&probe) {
                    for &j in list {
                        if j == i {
                            continue;
                        }
                        let dist2: f64 =
                            x.iter().zip(mu.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                        best = best.min(dist2);
                    }
                }
            }
            // any point outside the shells searched so far is at least ring*cell away
            if best.is_finite() && best.sqrt() <= ring as f64 * cell {
                break;
            }
            ring += 1;
        }
        total += best.sqrt();
    }
    Ok(total / n as f64)
}

/// Twice the mean nearest-neighbour spacing.
pub fn default_bandwidth(mu: &ParticleMeasure) -> Result<f64> {
    Ok(2.0 * mean_nearest_neighbor_spacing(mu)?)
}
