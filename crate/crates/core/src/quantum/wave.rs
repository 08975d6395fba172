use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform periodic grid `x_j = −L + j·dx`, `dx = 2L/N`, `j = 0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1d {
    pub half_width: f64,
    pub points: usize,
}

impl Grid1d {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) || points < 8 || points % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "grid needs L > 0 and an even N ≥ 8, got L = {half_width}, N = {points}"
            )));
        }
        Ok(Self { half_width, points })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.x(j)).collect()
    }

    /// Angular wavenumber of FFT bin `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.points as i64;
        let j = j as i64;
        let m = if j < n / 2 { j } else { j - n };
        std::f64::consts::PI * m as f64 / self.half_width
    }
}

/// Complex amplitudes on a [`Grid1d`] at semiclassical parameter `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid1d,
    eps: f64,
    values: Vec<Complex64>,
}

/// Amplitude tolerated on the two outermost layers.
pub const BOUNDARY_TOL: f64 = 1e-6;

impl WaveFunction {
    pub fn new(grid: Grid1d, eps: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.points {
            return Err(Error::DimensionMismatch { expected: grid.points, found: values.len() });
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("ε must be positive, got {eps}")));
        }
        Ok(Self { grid, eps, values })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Grid1d, eps: f64, f: F) -> Result<Self> {
        Self::new(grid, eps, grid.xs().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &Grid1d {
        &self.grid
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// `(Σ |ψ_j|² dx)^{1/2}`.
    pub fn norm(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::ZeroMass);
        }
        self.values.iter_mut().for_each(|v| *v /= n);
        Ok(self)
    }

    /// `ψ ↦ ψ̄`; maps the solution at `t` to the one at `−t` (real potentials).
    pub fn conj(&self) -> Self {
        Self { values: self.values.iter().map(|v| v.conj()).collect(), ..self.clone() }
    }

    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter("wave functions live on different grids".into()));
        }
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.dx()).sqrt())
    }

    /// Largest `|ψ|` on the two outermost layers at each end.
    pub fn boundary_amplitude(&self) -> f64 {
        let n = self.values.len();
        [0, 1, n - 2, n - 1].iter().map(|&j| self.values[j].norm()).fold(0.0, f64::max)
    }

    /// `|ψ_j|²`.
    pub fn position_density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `(⟨x⟩, Var x)` of `|ψ|²`.
    pub fn position_moments(&self) -> (f64, f64) {
        let dx = self.grid.dx();
        let rho = self.position_density();
        let m: f64 = rho.iter().sum::<f64>() * dx;
        let mean = rho.iter().enumerate().map(|(j, r)| r * self.grid.x(j)).sum::<f64>() * dx / m;
        let var = rho.iter().enumerate().map(|(j, r)| r * (self.grid.x(j) - mean).powi(2)).sum::<f64>() * dx / m;
        (mean, var)
    }
}
