use serde::{Deserialize, Serialize};

use super::SingularSet;
use crate::{Error, Result};

/// Bounded Lipschitz interaction term `U_b` with declared constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum BoundedPart {
    Zero,
    /// `a · cos(κ Σ_i x_i)`.
    Cosine { amplitude: f64, wavenumber: f64 },
    /// `a · s/(1+s)` with `s = √(|x|² + w²) − w`: a smoothed `|x|` saturated
    /// to stay bounded.
    SmoothedAbs { amplitude: f64, width: f64 },
}

impl BoundedPart {
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Cosine { amplitude, wavenumber } => {
                amplitude * (wavenumber * x.iter().sum::<f64>()).cos()
            }
            Self::SmoothedAbs { amplitude, width } => {
                let s = (norm2(x) + width * width).sqrt() - width;
                amplitude * s / (1.0 + s)
            }
        }
    }

    /// Adds `∇U_b(x)` into `out`.
    pub fn add_gradient(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            Self::Zero => {}
            Self::Cosine { amplitude, wavenumber } => {
                let g = -amplitude * wavenumber * (wavenumber * x.iter().sum::<f64>()).sin();
                out.iter_mut().for_each(|o| *o += g);
            }
            Self::SmoothedAbs { amplitude, width } => {
                let r = (norm2(x) + width * width).sqrt();
                let s = r - width;
                let g = amplitude / ((1.0 + s) * (1.0 + s) * r);
                out.iter_mut().zip(x).for_each(|(o, xi)| *o += g * xi);
            }
        }
    }

    /// Declared `sup |U_b|`.
    pub fn sup_norm(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Cosine { amplitude, .. } | Self::SmoothedAbs { amplitude, .. } => amplitude.abs(),
        }
    }

    /// Declared Lipschitz constant of `U_b` on `R^n` (also `sup |∇U_b|`).
    pub fn lipschitz(&self, n: usize) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Cosine { amplitude, wavenumber } => {
                amplitude.abs() * wavenumber.abs() * (n as f64).sqrt()
            }
            Self::SmoothedAbs { amplitude, .. } => amplitude.abs(),
        }
    }
}

/// Repulsive Coulomb part `U_s(x) = k / dist(x, S)`, optionally softened to
/// `k / √(dist² + r²)` (then smooth, with no singular set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coulomb {
    pub strength: f64,
    pub centers: SingularSet,
    #[serde(default)]
    pub softening: f64,
}

impl Coulomb {
    pub fn new(strength: f64, centers: SingularSet) -> Result<Self> {
        if !(strength > 0.0 && strength.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Coulomb strength must be positive (repulsive), got {strength}"
            )));
        }
        if centers.is_empty() {
            return Err(Error::InvalidParameter("Coulomb part needs a nonempty center set".into()));
        }
        Ok(Self { strength, centers, softening: 0.0 })
    }

    pub fn softened(mut self, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("softening radius {radius}")));
        }
        self.softening = radius;
        Ok(self)
    }

    fn is_singular(&self) -> bool {
        self.softening == 0.0
    }
}

/// `−∇(k / dist(x, S))` for a repulsive Coulomb center set.
pub fn coulomb_force(x: &[f64], strength: f64, centers: &SingularSet) -> Result<Vec<f64>> {
    let c = Coulomb::new(strength, centers.clone())?;
    let mut out = vec![0.0; x.len()];
    add_coulomb_gradient(&c, x, &mut out)?;
    out.iter_mut().for_each(|v| *v = -*v);
    Ok(out)
}

fn add_coulomb_gradient(c: &Coulomb, x: &[f64], out: &mut [f64]) -> Result<()> {
    let Some(proj) = c.centers.nearest(x) else {
        return Ok(());
    };
    let rel: Vec<f64> = x.iter().zip(&proj).map(|(a, b)| a - b).collect();
    let d2 = norm2(&rel);
    let r2 = d2 + c.softening * c.softening;
    if r2 == 0.0 {
        return Err(Error::SingularEvaluation { x: x.to_vec(), distance: 0.0 });
    }
    let g = -c.strength / (r2 * r2.sqrt());
    out.iter_mut().zip(&rel).for_each(|(o, r)| *o += g * r);
    Ok(())
}

/// `U = V0 + ω²|x|²/2 + U_s + U_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub n: usize,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub harmonic: Option<f64>,
    #[serde(default)]
    pub coulomb: Option<Coulomb>,
    pub bounded: BoundedPart,
}

impl Potential {
    pub fn zero(n: usize) -> Self {
        Self { n, offset: 0.0, harmonic: None, coulomb: None, bounded: BoundedPart::Zero }
    }

    pub fn harmonic(n: usize, omega: f64) -> Self {
        Self { harmonic: Some(omega), ..Self::zero(n) }
    }

    pub fn constant(n: usize, v0: f64) -> Self {
        Self { offset: v0, ..Self::zero(n) }
    }

    pub fn coulomb(n: usize, coulomb: Coulomb) -> Self {
        Self { coulomb: Some(coulomb), ..Self::zero(n) }
    }

    pub fn with_bounded(mut self, bounded: BoundedPart) -> Self {
        self.bounded = bounded;
        self
    }

    /// The set where the Coulomb part is singular (empty if softened or absent).
    pub fn singular_set(&self) -> SingularSet {
        match &self.coulomb {
            Some(c) if c.is_singular() => c.centers.clone(),
            _ => SingularSet::Empty,
        }
    }

    /// `U_s` alone (0 when absent).
    pub fn singular_value(&self, x: &[f64]) -> f64 {
        match &self.coulomb {
            Some(c) => {
                let d = c.centers.distance(x);
                c.strength / (d * d + c.softening * c.softening).sqrt()
            }
            None => 0.0,
        }
    }

    /// `U(x)`; `+∞` on the singular set.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.smooth_value(x) + self.singular_value(x)
    }

    /// `U` with the Coulomb distance clamped below at `clamp_radius`.
    pub fn clamped_value(&self, x: &[f64], clamp_radius: f64) -> f64 {
        let us = match &self.coulomb {
            Some(c) => {
                let d = c.centers.distance(x).max(clamp_radius);
                c.strength / (d * d + c.softening * c.softening).sqrt()
            }
            None => 0.0,
        };
        self.smooth_value(x) + us
    }

    fn smooth_value(&self, x: &[f64]) -> f64 {
        let mut u = self.offset + self.bounded.value(x);
        if let Some(w) = self.harmonic {
            u += 0.5 * w * w * norm2(x);
        }
        u
    }

    /// Writes `c(x) = −∇U(x)` into `out`.
    pub fn force_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = 0.0);
        if let Some(w) = self.harmonic {
            let w2 = w * w;
            out.iter_mut().zip(x).for_each(|(o, xi)| *o += w2 * xi);
        }
        self.bounded.add_gradient(x, out);
        if let Some(c) = &self.coulomb {
            add_coulomb_gradient(c, x, out)?;
        }
        out.iter_mut().for_each(|o| *o = -*o);
        Ok(())
    }

    /// Upper bound for `sup |c|` over `{dist(·, S) ≥ r} ∩ B_R`.
    pub fn local_bound(&self, r: f64, radius: f64) -> f64 {
        let mut b = self.bounded.lipschitz(self.n);
        if let Some(w) = self.harmonic {
            b += w * w * radius;
        }
        if let Some(c) = &self.coulomb {
            let eff = (r * r + c.softening * c.softening).sqrt();
            b += if eff > 0.0 { c.strength / (eff * eff) } else { f64::INFINITY };
        }
        b
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin(n: usize) -> SingularSet {
        SingularSet::points(vec![vec![0.0; n]]).unwrap()
    }

    #[test]
    fn coulomb_force_standard_gradient() {
        let f = coulomb_force(&[1.0, 0.0, 0.0], 1.0, &origin(3)).unwrap();
        assert_eq!(f, vec![1.0, 0.0, 0.0]);
        // n = 1, x = 2: k/x² = 1/4 pointing away from 0
        let f = coulomb_force(&[2.0], 1.0, &origin(1)).unwrap();
        assert!((f[0] - 0.25).abs() < 1e-15);
        let f = coulomb_force(&[-2.0], 1.0, &origin(1)).unwrap();
        assert!((f[0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn coulomb_rejects_singular_point_and_attractive_sign() {
        assert!(matches!(
            coulomb_force(&[0.0, 0.0], 1.0, &origin(2)),
            Err(Error::SingularEvaluation { .. })
        ));
        assert!(coulomb_force(&[1.0], -1.0, &origin(1)).is_err());
    }

    #[test]
    fn bounded_parts_respect_declared_constants() {
        let parts = [
            BoundedPart::Cosine { amplitude: 0.1, wavenumber: 3.0 },
            BoundedPart::SmoothedAbs { amplitude: -0.4, width: 0.2 },
        ];
        for part in parts {
            let lip = part.lipschitz(2);
            let mut prev: Option<([f64; 2], f64)> = None;
            for i in 0..2000 {
                let t = i as f64 * 0.01 - 10.0;
                let x = [t, 0.3 * t + (t * 1.7).sin()];
                let v = part.value(&x);
                assert!(v.abs() <= part.sup_norm() + 1e-15);
                if let Some((y, w)) = prev {
                    let dist = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                    assert!((v - w).abs() <= 1.05 * lip * dist + 1e-15);
                }
                prev = Some((x, v));
            }
        }
    }

    #[test]
    fn clamped_coulomb_is_bounded() {
        let u = Potential::coulomb(1, Coulomb::new(1.0, origin(1)).unwrap());
        assert_eq!(u.clamped_value(&[0.0], 0.01), 100.0);
        assert_eq!(u.clamped_value(&[0.5], 0.01), 2.0);
        assert_eq!(u.value(&[0.0]), f64::INFINITY);
    }
}
