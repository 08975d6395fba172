use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid1d, WaveFunction};
use crate::{Error, Result};

/// Envelope profile `φ0` with `∫|φ0|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// `(64/35a)^{1/2} cos⁴(πs/2a)` on `|s| ≤ a`: compactly supported and C³.
    Compact { half_width: f64 },
    /// `(πσ²)^{-1/4} exp(−s²/2σ²)`; with `α = 1/2`, `σ = 1` the WKB datum is a coherent state.
    Gaussian { sigma: f64 },
}

impl Default for Envelope {
    fn default() -> Self {
        Envelope::Compact { half_width: 1.0 }
    }
}

impl Envelope {
    pub fn validate(&self) -> Result<()> {
        let w = match *self {
            Envelope::Compact { half_width } => half_width,
            Envelope::Gaussian { sigma } => sigma,
        };
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("envelope width must be positive, got {w}")));
        }
        Ok(())
    }

    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Envelope::Compact { half_width: a } => {
                if s.abs() >= a {
                    0.0
                } else {
                    (64.0 / (35.0 * a)).sqrt() * (0.5 * PI * s / a).cos().powi(4)
                }
            }
            Envelope::Gaussian { sigma } => (PI * sigma * sigma).powf(-0.25) * (-0.5 * s * s / (sigma * sigma)).exp(),
        }
    }

    /// Half-width outside of which `φ0` is zero (or below `e^{-32}` of its peak).
    pub fn support_radius(&self) -> f64 {
        match *self {
            Envelope::Compact { half_width } => half_width,
            Envelope::Gaussian { sigma } => 8.0 * sigma,
        }
    }

    /// `|φ̂0(ξ)|²` with `φ̂0(ξ) = (2π)^{-1/2} ∫ φ0(s) e^{−iξs} ds`.
    pub fn fourier_density(&self, xi: f64) -> f64 {
        match *self {
            Envelope::Gaussian { sigma } => sigma / PI.sqrt() * (-sigma * sigma * xi * xi).exp(),
            Envelope::Compact { half_width: a } => {
                // even profile: φ̂0(ξ) = (2/π)^{1/2} ∫_0^a φ0(s) cos(ξs) ds, composite Simpson
                let n = 2000;
                let h = a / n as f64;
                let mut acc = 0.0;
                for i in 0..=n {
                    let s = i as f64 * h;
                    let c = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    acc += c * self.value(s) * (xi * s).cos();
                }
                let f = (2.0 / PI).sqrt() * acc * h / 3.0;
                f * f
            }
        }
    }
}

/// Parameters of `ε^{-α/2} φ0((x − x0)/ε^α) e^{i x p0/ε}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WkbParams {
    pub x0: f64,
    pub p0: f64,
    pub alpha: f64,
    pub envelope: Envelope,
    pub eps: f64,
}

impl WkbParams {
    pub fn validate(&self) -> Result<()> {
        self.envelope.validate()?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("α must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!("ε must be positive, got {}", self.eps)));
        }
        Ok(())
    }

    /// Spatial scale `ε^α`.
    pub fn scale(&self) -> f64 {
        self.eps.powf(self.alpha)
    }

    /// Largest grid spacing that resolves the phase oscillation.
    pub fn max_spacing(&self) -> f64 {
        self.eps / (4.0 * self.p0.abs() + 4.0)
    }
}

/// Samples the WKB datum and renormalizes it to unit discrete L² norm.
pub fn wkb_initial(params: &WkbParams, grid: &Grid1d) -> Result<WaveFunction> {
    params.validate()?;
    let dx = grid.dx();
    if dx > params.max_spacing() {
        let need = (2.0 * grid.half_width / params.max_spacing()).ceil() as usize;
        return Err(Error::Resolution(format!(
            "spacing {dx:.3e} does not resolve e^(ix·p0/ε); need N ≥ {} (next even: {})",
            need,
            need + need % 2
        )));
    }
    let reach = params.x0.abs() + params.scale() * params.envelope.support_radius();
    if reach > 0.95 * grid.half_width {
        return Err(Error::Resolution(format!(
            "envelope reaches |x| = {reach:.3}; need L ≥ {:.3}",
            reach / 0.95
        )));
    }
    let s = params.scale();
    let amp = s.powf(-0.5);
    let psi = WaveFunction::from_fn(*grid, params.eps, |x| {
        amp * params.envelope.value((x - params.x0) / s) * Complex64::from_polar(1.0, x * params.p0 / params.eps)
    })?;
    let correction = (psi.norm() - 1.0).abs();
    if correction > 1e-6 {
        log::warn!("wkb datum: quadrature renormalization {correction:.2e}");
    } else {
        log::debug!("wkb datum: quadrature renormalization {correction:.2e}");
    }
    psi.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelopes_are_normalized() {
        for env in [Envelope::Compact { half_width: 1.3 }, Envelope::Gaussian { sigma: 0.7 }] {
            let n = 20000;
            let r = env.support_radius() * 1.2;
            let h = 2.0 * r / n as f64;
            let l2: f64 = (0..n).map(|i| env.value(-r + (i as f64 + 0.5) * h).powi(2)).sum::<f64>() * h;
            assert!((l2 - 1.0).abs() < 1e-9, "{env:?}: {l2}");
            // Plancherel for the momentum profile
            let xr = 40.0 / env.support_radius().min(1.0);
            let hx = 2.0 * xr / 8000.0;
            let m: f64 = (0..8000).map(|i| env.fourier_density(-xr + (i as f64 + 0.5) * hx)).sum::<f64>() * hx;
            assert!((m - 1.0).abs() < 1e-5, "{env:?}: {m}");
        }
    }

    #[test]
    fn unit_scale_without_phase_is_the_envelope() {
        let grid = Grid1d::new(4.0, 512).unwrap();
        let env = Envelope::Compact { half_width: 1.0 };
        let p = WkbParams { x0: 0.0, p0: 0.0, alpha: 0.5, envelope: env, eps: 1.0 };
        let psi = wkb_initial(&p, &grid).unwrap();
        for (j, v) in psi.values().iter().enumerate() {
            assert!((v.re - env.value(grid.x(j))).abs() < 1e-9);
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn resolution_and_margin_errors() {
        let env = Envelope::default();
        let p = WkbParams { x0: 0.0, p0: 2.0, alpha: 0.5, envelope: env, eps: 0.05 };
        assert!(matches!(wkb_initial(&p, &Grid1d::new(4.0, 256).unwrap()), Err(Error::Resolution(_))));
        let far = WkbParams { x0: 3.9, ..p };
        assert!(matches!(wkb_initial(&far, &Grid1d::new(4.0, 4096).unwrap()), Err(Error::Resolution(_))));
        assert!(wkb_initial(&WkbParams { alpha: 1.5, ..p }, &Grid1d::new(4.0, 4096).unwrap()).is_err());
    }
}
