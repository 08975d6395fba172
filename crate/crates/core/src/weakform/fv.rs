use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fields::PhaseSpaceField;
use crate::flow::uniform_times;
use crate::measures::GridDensity;
use crate::{Error, Result};

use super::DEFAULT_MARGIN;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FvConfig {
    pub cfl: f64,
    /// Fixed step; `None` picks the largest admissible one.
    pub dt: Option<f64>,
    /// Number of stored time samples on `[0, T]`.
    pub samples: usize,
    pub margin: f64,
}

impl Default for FvConfig {
    fn default() -> Self {
        Self { cfl: 0.45, dt: None, samples: 11, margin: DEFAULT_MARGIN }
    }
}

/// Upwind finite-volume evolution `w_t` on the shared grid.
#[derive(Debug, Clone)]
pub struct FvSolution {
    pub times: Arc<[f64]>,
    pub densities: Vec<GridDensity>,
    /// Cumulative mass that left through the boundary, per stored time.
    pub outflow: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
}

impl FvSolution {
    pub fn last(&self) -> &GridDensity {
        &self.densities[self.densities.len() - 1]
    }

    /// `mass(t) + outflow(t) − mass(0)`, largest in magnitude.
    pub fn mass_defect(&self) -> f64 {
        let m0 = self.densities[0].integral();
        self.densities
            .iter()
            .zip(&self.outflow)
            .map(|(w, o)| (w.integral() + o - m0).abs())
            .fold(0.0, f64::max)
    }
}

/// Face velocities for one axis: faces along `axis` run over `0..=n_axis`.
struct AxisFaces {
    n: usize,
    stride: usize,
    velocity: Vec<f64>,
}

impl AxisFaces {
    fn face(&self, cell: usize, side: usize) -> usize {
        let block = self.n * self.stride;
        let outer = cell / block;
        let i = (cell / self.stride) % self.n;
        let inner = cell % self.stride;
        outer * (self.n + 1) * self.stride + (i + side) * self.stride + inner
    }
}

/// First-order upwind scheme with forward Euler stepping and outflow
/// boundaries for `∂_t w + ∇·(b w) = 0`.
pub fn solve_functional_continuity(
    w0: &GridDensity,
    b: &PhaseSpaceField,
    horizon: f64,
    cfg: &FvConfig,
) -> Result<FvSolution> {
    if w0.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), found: w0.dim() });
    }
    if !b.singular_set().is_empty() {
        let distance = b.singular_set().distance_to_box(&w0.domain().leading(b.n()));
        if distance < cfg.margin {
            return Err(Error::SupportTooClose { distance, margin: cfg.margin });
        }
    }
    solve_transport(w0, |z, out| b.eval_into(z, out), horizon, cfg)
}

/// The same scheme for an arbitrary velocity field `v(z)`.
pub fn solve_transport<V>(w0: &GridDensity, velocity: V, horizon: f64, cfg: &FvConfig) -> Result<FvSolution>
where
    V: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    let d = w0.dim();
    if !(horizon > 0.0) || cfg.samples < 2 || !(cfg.cfl > 0.0 && cfg.cfl <= 1.0) {
        return Err(Error::InvalidParameter("need T > 0, samples ≥ 2 and 0 < cfl ≤ 1".into()));
    }
    if w0.values().iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidParameter("initial density must be nonnegative".into()));
    }
    let cells = w0.cells_per_axis().to_vec();
    let spacing: Vec<f64> = (0..d).map(|a| w0.spacing(a)).collect();
    let lo = w0.domain().lo.clone();

    // b_a at the centre of every face normal to axis a
    let mut faces = Vec::with_capacity(d);
    let mut field = vec![0.0; d];
    for a in 0..d {
        let stride: usize = cells[a + 1..].iter().product();
        let mut fcells = cells.clone();
        fcells[a] += 1;
        let count: usize = fcells.iter().product();
        let mut face_v = vec![0.0; count];
        let mut idx = vec![0usize; d];
        let mut z = vec![0.0; d];
        for (f, v) in face_v.iter_mut().enumerate() {
            let mut r = f;
            for ax in (0..d).rev() {
                idx[ax] = r % fcells[ax];
                r /= fcells[ax];
            }
            for ax in 0..d {
                let off = if ax == a { 0.0 } else { 0.5 };
                z[ax] = lo[ax] + (idx[ax] as f64 + off) * spacing[ax];
            }
            velocity(&z, &mut field)?;
            *v = field[a];
        }
        faces.push(AxisFaces { n: cells[a], stride, velocity: face_v });
    }

    // largest stable step
    let mut rate = 0.0f64;
    for cell in 0..w0.len() {
        let r: f64 = faces
            .iter()
            .zip(&spacing)
            .map(|(af, h)| af.velocity[af.face(cell, 0)].abs().max(af.velocity[af.face(cell, 1)].abs()) / h)
            .sum();
        rate = rate.max(r);
    }
    let max_dt = if rate > 0.0 { cfg.cfl / rate } else { f64::INFINITY };
    let intervals = cfg.samples - 1;
    let steps = match cfg.dt {
        Some(dt) if dt > max_dt => return Err(Error::Cfl { dt, max_dt }),
        Some(dt) => {
            let per = ((horizon / dt / intervals as f64) - 1e-9).ceil().max(1.0) as usize;
            per * intervals
        }
        None => {
            let per = if max_dt.is_finite() { (horizon / max_dt / intervals as f64).ceil().max(1.0) as usize } else { 1 };
            per * intervals
        }
    };
    let dt = horizon / steps as f64;
    let per = steps / intervals;

    let vol = w0.cell_volume();
    let mut w = w0.values().to_vec();
    let mut next = vec![0.0; w.len()];
    let mut outflow = 0.0;
    let mut densities = vec![w0.clone()];
    let mut outflows = vec![0.0];
    for step in 1..=steps {
        next.copy_from_slice(&w);
        for (af, h) in faces.iter().zip(&spacing) {
            let ratio = dt / h;
            let area = vol / h;
            for cell in 0..w.len() {
                let i = (cell / af.stride) % af.n;
                // flux through the right face of `cell`
                let v = af.velocity[af.face(cell, 1)];
                let right = if i + 1 < af.n { Some(cell + af.stride) } else { None };
                let flux = match right {
                    Some(r) => {
                        if v > 0.0 {
                            v * w[cell]
                        } else {
                            v * w[r]
                        }
                    }
                    None => v.max(0.0) * w[cell],
                };
                next[cell] -= ratio * flux;
                match right {
                    Some(r) => next[r] += ratio * flux,
                    None => outflow += dt * area * flux,
                }
                if i == 0 {
                    let vl = af.velocity[af.face(cell, 0)];
                    let out = (-vl).max(0.0) * w[cell];
                    next[cell] -= ratio * out;
                    outflow += dt * area * out;
                }
            }
        }
        std::mem::swap(&mut w, &mut next);
        if step % per == 0 {
            let mut g = w0.clone();
            g.values_mut().copy_from_slice(&w);
            densities.push(g);
            outflows.push(outflow);
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { location: vec![], what: "finite-volume density".into() });
    }
    // roundoff can leave −1e-300-sized values; positivity is a property of the scheme
    for g in densities.iter_mut() {
        g.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    }
    Ok(FvSolution { times: uniform_times(horizon, intervals), densities, outflow: outflows, dt, steps })
}
