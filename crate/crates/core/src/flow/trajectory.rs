use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fields::PhaseSpaceField;
use crate::{Error, Result};

/// Step control for the guarded RK4 integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepControl {
    /// Macro step; the stored grid (if any) is a uniform refinement of `[0, T]` at this spacing.
    pub dt: f64,
    /// Trajectories that come closer than this to `S` are marked `singular_hit`.
    pub min_dist: f64,
    /// Floor for guard-shortened substeps.
    pub min_step: f64,
    /// Guard factor: substeps are at most `guard · dist(x,S) / max(|p|, |c(x)|)`.
    pub guard: f64,
    /// Shared uniform output grid size; `None` keeps every macro step.
    pub samples: Option<usize>,
    /// Tolerated invalid mass fraction for a usable flow map.
    pub max_invalid: f64,
    pub escape_radius: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            min_dist: 1e-4,
            min_step: 1e-12,
            guard: 0.1,
            samples: Some(256),
            max_invalid: 1e-3,
            escape_radius: 1e8,
        }
    }
}

impl StepControl {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn samples(mut self, samples: Option<usize>) -> Self {
        self.samples = samples;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("dt", self.dt), ("min_dist", self.min_dist), ("min_step", self.min_step), ("guard", self.guard)];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("step control `{name}` must be positive, got {v}")));
        }
        if matches!(self.samples, Some(s) if s < 2) {
            return Err(Error::InvalidParameter("output grid needs at least 2 samples".into()));
        }
        if !(0.0..=1.0).contains(&self.max_invalid) {
            return Err(Error::InvalidParameter("max_invalid must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Stored time grid on `[0, T]`.
    pub fn output_times(&self, horizon: f64) -> Arc<[f64]> {
        let n = match self.samples {
            Some(s) => s - 1,
            None => self.macro_steps(horizon),
        };
        uniform_times(horizon, n)
    }

    pub(crate) fn macro_steps(&self, horizon: f64) -> usize {
        ((horizon / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// `n + 1` equispaced times on `[0, T]`.
pub fn uniform_times(horizon: f64, n: usize) -> Arc<[f64]> {
    (0..=n).map(|k| if k == n { horizon } else { horizon * k as f64 / n as f64 }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Complete,
    SingularHit { time: f64 },
    Escaped { time: f64 },
}

impl TrajectoryStatus {
    pub fn is_complete(&self) -> bool {
        matches!(self, Self::Complete)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Complete => "complete",
            Self::SingularHit { .. } => "singular_hit",
            Self::Escaped { .. } => "escaped",
        }
    }

    pub fn time(&self) -> Option<f64> {
        match self {
            Self::Complete => None,
            Self::SingularHit { time } | Self::Escaped { time } => Some(*time),
        }
    }
}

/// `t ↦ X(t, z0)` on a stored grid. Samples after an early stop are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Arc<[f64]>,
    dim: usize,
    states: Vec<f64>,
    status: TrajectoryStatus,
    min_singular_dist: f64,
}

impl Trajectory {
    pub fn from_parts(
        times: Arc<[f64]>,
        dim: usize,
        states: Vec<f64>,
        status: TrajectoryStatus,
        min_singular_dist: f64,
    ) -> Result<Self> {
        if times.is_empty() || times[0] != 0.0 {
            return Err(Error::InvalidParameter("trajectory times must start at 0".into()));
        }
        if states.len() != times.len() * dim {
            return Err(Error::DimensionMismatch { expected: times.len() * dim, found: states.len() });
        }
        Ok(Self { times, dim, states, status, min_singular_dist })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn shared_times(&self) -> Arc<[f64]> {
        self.times.clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn states_mut(&mut self) -> &mut [f64] {
        &mut self.states
    }

    pub fn initial(&self) -> &[f64] {
        self.state(0)
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn status(&self) -> TrajectoryStatus {
        self.status
    }

    pub fn is_complete(&self) -> bool {
        self.status.is_complete()
    }

    /// Smallest distance of the x-component to `S` seen by the integrator.
    pub fn min_singular_dist(&self) -> f64 {
        self.min_singular_dist
    }

    /// A trajectory that starts on `S`: only the initial state is recorded.
    pub(crate) fn stopped_at_start(times: Arc<[f64]>, z0: &[f64]) -> Self {
        let dim = z0.len();
        let mut states = vec![f64::NAN; times.len() * dim];
        states[..dim].copy_from_slice(z0);
        Self { times, dim, states, status: TrajectoryStatus::SingularHit { time: 0.0 }, min_singular_dist: 0.0 }
    }

    pub(crate) fn into_states(self) -> Vec<f64> {
        self.states
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

struct Rk4 {
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        Self { k2: vec![0.0; dim], k3: vec![0.0; dim], k4: vec![0.0; dim], tmp: vec![0.0; dim] }
    }

    /// One classical RK4 step; `k1 = b(z)` is supplied by the caller.
    fn step(&mut self, b: &PhaseSpaceField, z: &mut [f64], k1: &[f64], h: f64) -> Result<()> {
        let axpy = |out: &mut [f64], z: &[f64], k: &[f64], s: f64| {
            out.iter_mut().zip(z.iter().zip(k)).for_each(|(o, (a, b))| *o = a + s * b);
        };
        axpy(&mut self.tmp, z, k1, 0.5 * h);
        b.eval_into(&self.tmp, &mut self.k2)?;
        axpy(&mut self.tmp, z, &self.k2, 0.5 * h);
        b.eval_into(&self.tmp, &mut self.k3)?;
        axpy(&mut self.tmp, z, &self.k3, h);
        b.eval_into(&self.tmp, &mut self.k4)?;
        for i in 0..z.len() {
            z[i] += h / 6.0 * (k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// Cubic Hermite interpolant at `s ∈ [0, 1]` of a step of length `h`.
fn hermite(z0: &[f64], f0: &[f64], z1: &[f64], f1: &[f64], h: f64, s: f64, out: &mut [f64]) {
    if s >= 1.0 {
        out.copy_from_slice(z1);
        return;
    }
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    for i in 0..out.len() {
        out[i] = h00 * z0[i] + h * h10 * f0[i] + h01 * z1[i] + h * h11 * f1[i];
    }
}

/// Integrates `ż = b(z)` from `z0` over `[0, T]` with guarded RK4 and stores
/// the solution on `ctrl`'s output grid (cubic Hermite dense output).
pub fn integrate_trajectory(b: &PhaseSpaceField, z0: &[f64], horizon: f64, ctrl: &StepControl) -> Result<Trajectory> {
    let times = ctrl.output_times(horizon);
    integrate_on(b, z0, horizon, ctrl, times)
}

pub(crate) fn integrate_on(
    b: &PhaseSpaceField,
    z0: &[f64],
    horizon: f64,
    ctrl: &StepControl,
    times: Arc<[f64]>,
) -> Result<Trajectory> {
    ctrl.validate()?;
    let dim = b.dim();
    let n = b.n();
    if z0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: z0.len() });
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let singular = !b.singular_set().is_empty();
    let d0 = b.dist_to_singular(&z0[..n]);
    if singular && d0 == 0.0 {
        return Err(Error::SingularEvaluation { x: z0[..n].to_vec(), distance: 0.0 });
    }
    let mut states = vec![f64::NAN; times.len() * dim];
    states[..dim].copy_from_slice(z0);
    let mut next_out = 1;
    let mut min_dist = d0;
    if singular && d0 < ctrl.min_dist {
        let status = TrajectoryStatus::SingularHit { time: 0.0 };
        return Trajectory::from_parts(times, dim, states, status, min_dist);
    }

    let mut z = z0.to_vec();
    let mut f = vec![0.0; dim];
    b.eval_into(&z, &mut f)?;
    let mut z_start = z.clone();
    let mut f_start = f.clone();
    let mut rk = Rk4::new(dim);
    let macros = ctrl.macro_steps(horizon);
    let out_tol = 1e-12 * horizon;
    let mut status = TrajectoryStatus::Complete;

    'outer: for m in 0..macros {
        let t0 = horizon * m as f64 / macros as f64;
        let t1 = if m + 1 == macros { horizon } else { horizon * (m + 1) as f64 / macros as f64 };
        z_start.copy_from_slice(&z);
        f_start.copy_from_slice(&f);
        let mut t = t0;
        while t < t1 {
            let mut h = t1 - t;
            if singular {
                let speed = norm(&f[..n]).max(norm(&f[n..])).max(1e-9);
                let d = b.dist_to_singular(&z[..n]);
                h = h.min((ctrl.guard * d / speed).max(ctrl.min_step));
            }
            let last = h >= t1 - t;
            rk.step(b, &mut z, &f, h)?;
            t = if last { t1 } else { t + h };
            if singular {
                let d = b.dist_to_singular(&z[..n]);
                min_dist = min_dist.min(d);
                if d < ctrl.min_dist {
                    status = TrajectoryStatus::SingularHit { time: t };
                    break 'outer;
                }
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { location: z[..n].to_vec(), what: "trajectory state".into() });
            }
            if norm(&z) > ctrl.escape_radius {
                status = TrajectoryStatus::Escaped { time: t };
                break 'outer;
            }
            b.eval_into(&z, &mut f)?;
        }
        let h = t1 - t0;
        while next_out < times.len() && times[next_out] <= t1 + out_tol {
            let s = (times[next_out] - t0) / h;
            let slot = &mut states[next_out * dim..(next_out + 1) * dim];
            hermite(&z_start, &f_start, &z, &f, h, s, slot);
            next_out += 1;
        }
    }
    Trajectory::from_parts(times, dim, states, status, min_dist)
}
