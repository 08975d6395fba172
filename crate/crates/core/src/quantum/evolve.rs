use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::WaveFunction;
use crate::fields::Potential;
use crate::{Error, Result};

/// Strang-split spectral propagator for `iε ∂_t ψ = −ε²/2 ψ'' + U ψ`:
/// half potential phase, exact kinetic step in Fourier space, half potential phase.
pub struct SplitStep {
    dt: f64,
    half_phase: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    clamp_radius: Option<f64>,
}

impl SplitStep {
    /// Coulomb parts are clamped at two grid spacings from their centres.
    pub fn new(psi: &WaveFunction, potential: &Potential, dt: f64) -> Result<Self> {
        if potential.n != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: potential.n });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        let grid = *psi.grid();
        let eps = psi.eps();
        let clamp_radius = potential.coulomb.as_ref().map(|_| 2.0 * grid.dx());
        let mut half_phase = Vec::with_capacity(grid.points);
        for j in 0..grid.points {
            let x = [grid.x(j)];
            let u = match clamp_radius {
                Some(r) => potential.clamped_value(&x, r),
                None => potential.value(&x),
            };
            if !u.is_finite() {
                return Err(Error::NonFinite { location: x.to_vec(), what: "potential on grid".into() });
            }
            half_phase.push(Complex64::from_polar(1.0, -0.5 * u * dt / eps));
        }
        let n = grid.points as f64;
        let kinetic = (0..grid.points)
            .map(|j| {
                let k = grid.wavenumber(j);
                Complex64::from_polar(1.0 / n, -0.5 * dt * eps * k * k)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.points);
        let inverse = planner.plan_fft_inverse(grid.points);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Ok(Self {
            dt,
            half_phase,
            kinetic,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            clamp_radius,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Coulomb clamp radius `r_c`, if a Coulomb part is present.
    pub fn clamp_radius(&self) -> Option<f64> {
        self.clamp_radius
    }

    pub fn step(&mut self, psi: &mut WaveFunction, steps: usize) {
        let v = psi.values_mut();
        for _ in 0..steps {
            v.iter_mut().zip(&self.half_phase).for_each(|(a, b)| *a *= b);
            self.forward.process_with_scratch(v, &mut self.scratch);
            v.iter_mut().zip(&self.kinetic).for_each(|(a, b)| *a *= b);
            self.inverse.process_with_scratch(v, &mut self.scratch);
            v.iter_mut().zip(&self.half_phase).for_each(|(a, b)| *a *= b);
        }
    }
}

/// `steps` Strang steps of size `dt`.
pub fn evolve(psi: &WaveFunction, potential: &Potential, dt: f64, steps: usize) -> Result<WaveFunction> {
    let mut out = psi.clone();
    SplitStep::new(psi, potential, dt)?.step(&mut out, steps);
    Ok(out)
}

/// States at `k·T/(samples−1)`, `k = 0..samples`, using the largest step
/// `≤ dt` that divides the sampling interval.
pub fn evolve_sampled(
    psi: &WaveFunction,
    potential: &Potential,
    dt: f64,
    horizon: f64,
    samples: usize,
) -> Result<(Vec<WaveFunction>, SplitStep)> {
    if samples < 2 || !(horizon > 0.0) {
        return Err(Error::InvalidParameter("need T > 0 and at least 2 samples".into()));
    }
    let interval = horizon / (samples - 1) as f64;
    let per = ((interval / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut stepper = SplitStep::new(psi, potential, interval / per as f64)?;
    let mut states = vec![psi.clone()];
    let mut cur = psi.clone();
    for _ in 1..samples {
        stepper.step(&mut cur, per);
        states.push(cur.clone());
    }
    Ok((states, stepper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::Grid1d;

    #[test]
    fn plane_wave_picks_up_the_free_phase() {
        let grid = Grid1d::new(4.0, 64).unwrap();
        let eps = 0.3;
        let k = grid.wavenumber(5);
        let psi = WaveFunction::from_fn(grid, eps, |x| Complex64::from_polar(1.0, k * x)).unwrap();
        let t = 0.7;
        let out = evolve(&psi, &Potential::zero(1), t / 10.0, 10).unwrap();
        let phase = Complex64::from_polar(1.0, -0.5 * eps * k * k * t);
        for (a, b) in out.values().iter().zip(psi.values()) {
            assert!((a - b * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_potential_is_a_global_phase() {
        let grid = Grid1d::new(6.0, 128).unwrap();
        let eps = 0.5;
        let psi = WaveFunction::from_fn(grid, eps, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
        let free = evolve(&psi, &Potential::zero(1), 1e-2, 50).unwrap();
        let shifted = evolve(&psi, &Potential::constant(1, 2.0), 1e-2, 50).unwrap();
        let phase = Complex64::from_polar(1.0, -2.0 * 0.5 / eps);
        for (a, b) in shifted.values().iter().zip(free.values()) {
            assert!((a - b * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_and_time_reversible() {
        let grid = Grid1d::new(8.0, 256).unwrap();
        let eps = 0.2;
        let psi = WaveFunction::from_fn(grid, eps, |x| {
            Complex64::from_polar((-(x - 1.0) * (x - 1.0)).exp(), 0.8 * x / eps)
        })
        .unwrap()
        .normalized()
        .unwrap();
        let u = Potential::harmonic(1, 1.0);
        let fwd = evolve(&psi, &u, 1e-2, 100).unwrap();
        assert!((fwd.norm() - 1.0).abs() < 1e-12);
        let back = evolve(&fwd.conj(), &u, 1e-2, 100).unwrap().conj();
        assert!(back.l2_distance(&psi).unwrap() < 1e-11);
    }

    #[test]
    fn sampled_steps_divide_the_interval() {
        let grid = Grid1d::new(4.0, 64).unwrap();
        let psi = WaveFunction::from_fn(grid, 0.5, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
        let (states, stepper) = evolve_sampled(&psi, &Potential::zero(1), 3e-2, 1.0, 5).unwrap();
        assert_eq!(states.len(), 5);
        assert!((stepper.dt() - 0.25 / 9.0).abs() < 1e-15);
        assert_eq!(stepper.clamp_radius(), None);
    }
}
