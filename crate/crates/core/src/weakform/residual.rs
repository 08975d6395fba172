use serde::{Deserialize, Serialize};

use crate::fields::PhaseSpaceField;
use crate::measures::dictionary::profile;
use crate::measures::{ParticleMeasure, TestFunction};
use crate::{Error, Result};

use super::MeasureCurve;

/// Minimum distance between a test function's x-support and `S`.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Smooth time test function compactly supported in `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBump {
    pub lo: f64,
    pub hi: f64,
}

impl TimeBump {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidParameter(format!("time bump needs lo < hi, got ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    /// The bump on `(f·T, (1−f)·T)`.
    pub fn interior(horizon: f64, f: f64) -> Result<Self> {
        Self::new(f * horizon, (1.0 - f) * horizon)
    }

    /// `(ϕ(t), ϕ'(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let half = 0.5 * (self.hi - self.lo);
        let (v, dv) = profile((t - 0.5 * (self.lo + self.hi)) / half);
        (v, dv / half)
    }
}

/// `(∫φ dμ, ∫⟨b, ∇φ⟩ dμ)`; `b` is only evaluated inside `supp φ`.
pub(crate) fn pairings(mu: &ParticleMeasure, b: &PhaseSpaceField, phi: &dyn TestFunction) -> Result<(f64, f64)> {
    let d = mu.dim();
    let support = phi.support();
    let mut grad = vec![0.0; d];
    let mut field = vec![0.0; d];
    let (mut a, mut c) = (0.0, 0.0);
    for (z, w) in mu.points().zip(mu.weights()) {
        if !support.contains(z) {
            continue;
        }
        a += w * phi.value(z);
        phi.gradient(z, &mut grad);
        if grad.iter().all(|g| *g == 0.0) {
            continue;
        }
        b.eval_into(z, &mut field)?;
        c += w * field.iter().zip(&grad).map(|(f, g)| f * g).sum::<f64>();
    }
    Ok((a, c))
}

pub(crate) fn check_margin(b: &PhaseSpaceField, phi: &dyn TestFunction, margin: f64) -> Result<()> {
    if b.singular_set().is_empty() {
        return Ok(());
    }
    let distance = b.singular_set().distance_to_box(&phi.support().leading(b.n()));
    if distance < margin {
        return Err(Error::SupportTooClose { distance, margin });
    }
    Ok(())
}

/// `|∫_0^T [ϕ'(t) ∫φ dμ_t + ϕ(t) ∫⟨b,∇φ⟩ dμ_t] dt|`, trapezoid in time.
pub fn weak_residual(curve: &MeasureCurve, b: &PhaseSpaceField, phi: &dyn TestFunction, psi: &TimeBump) -> Result<f64> {
    weak_residual_with_margin(curve, b, phi, psi, DEFAULT_MARGIN)
}

pub fn weak_residual_with_margin(
    curve: &MeasureCurve,
    b: &PhaseSpaceField,
    phi: &dyn TestFunction,
    psi: &TimeBump,
    margin: f64,
) -> Result<f64> {
    if curve.dim() != b.dim() || phi.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), found: curve.dim().max(phi.dim()) });
    }
    check_margin(b, phi, margin)?;
    let times = curve.times();
    let mut g = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let (v, dv) = psi.eval(t);
        if v == 0.0 && dv == 0.0 {
            g.push(0.0);
            continue;
        }
        let (a, c) = pairings(curve.slice(k), b, phi)?;
        g.push(dv * a + v * c);
    }
    let integral: f64 = times.windows(2).zip(g.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum();
    Ok(integral.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_field, FieldSpec};
    use crate::flow::uniform_times;
    use crate::measures::Bump;

    #[test]
    fn time_bump_vanishes_outside() {
        let psi = TimeBump::new(0.2, 0.8).unwrap();
        assert_eq!(psi.eval(0.1), (0.0, 0.0));
        assert_eq!(psi.eval(0.5).0, 1.0);
        let h = 1e-6;
        let fd = (psi.eval(0.4 + h).0 - psi.eval(0.4 - h).0) / (2.0 * h);
        assert!((fd - psi.eval(0.4).1).abs() < 1e-6);
    }

    #[test]
    fn constant_curve_with_zero_field() {
        let b = make_field(&FieldSpec::new("free")).unwrap();
        let mu = ParticleMeasure::from_points(2, &[vec![0.1, 0.0], vec![-0.2, 0.0]], vec![0.5, 0.5]).unwrap();
        let c = MeasureCurve::constant(uniform_times(1.0, 64), mu, "const").unwrap();
        let phi = Bump::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let r = weak_residual(&c, &b, &phi, &TimeBump::interior(1.0, 0.1).unwrap()).unwrap();
        assert!(r <= 1e-14, "{r}");
    }

    #[test]
    fn support_near_singular_set_is_rejected() {
        let b = make_field(&FieldSpec::new("coulomb").param("k", 1.0)).unwrap();
        let mu = ParticleMeasure::dirac(&[1.0, 0.0]);
        let c = MeasureCurve::constant(uniform_times(1.0, 4), mu, "c").unwrap();
        let near = Bump::new(vec![0.5, 0.0], vec![0.48, 1.0]).unwrap();
        let psi = TimeBump::interior(1.0, 0.1).unwrap();
        assert!(matches!(weak_residual(&c, &b, &near, &psi), Err(Error::SupportTooClose { .. })));
        let far = Bump::new(vec![1.0, 0.0], vec![0.5, 1.0]).unwrap();
        assert!(weak_residual(&c, &b, &far, &psi).is_ok());
    }
}
