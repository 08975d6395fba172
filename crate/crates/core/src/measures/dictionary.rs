use std::sync::{Arc, OnceLock};

use super::BoxDomain;
use crate::{Error, Result};

/// A scalar function on R^d that can be integrated against a measure.
pub trait Observable: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
}

/// Smooth compactly supported test function.
pub trait TestFunction: Observable {
    /// Writes `∇φ(x)` into `out`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Closed box outside of which `φ` and `∇φ` vanish.
    fn support(&self) -> &BoxDomain;
    /// Upper bound on `sup |φ|`.
    fn sup_bound(&self) -> f64;
    /// `∫ φ dx`.
    fn lebesgue_integral(&self) -> f64;
}

/// Closure with a declared dimension.
pub struct FnObservable<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnObservable<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Observable for FnObservable<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

// exp(-1/(1-s^2)) underflows below this gap; treat it as zero to keep the
// gradient formula finite.
const BUMP_EDGE: f64 = 1.0 / 700.0;

pub(crate) fn profile(s: f64) -> (f64, f64) {
    let g = 1.0 - s * s;
    if g <= BUMP_EDGE {
        return (0.0, 0.0);
    }
    let v = std::f64::consts::E * (-1.0 / g).exp();
    (v, v * (-2.0 * s / (g * g)))
}

/// `∫_{-1}^{1} e·exp(-1/(1-s²)) ds`, the mass of the unit-radius profile.
pub fn bump_profile_integral() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        // composite Simpson; the integrand is smooth and flat at ±1
        let n = 20_000;
        let h = 2.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let s = -1.0 + i as f64 * h;
            let c = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += c * profile(s).0;
        }
        acc * h / 3.0
    })
}

/// Tensor-product bump `Π_a η((x_a − c_a)/r_a)` with `η(s) = e·exp(−1/(1−s²))`,
/// normalized so that `sup φ = φ(c) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    center: Vec<f64>,
    radii: Vec<f64>,
    support: BoxDomain,
}

impl Bump {
    pub fn new(center: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        if center.len() != radii.len() {
            return Err(Error::DimensionMismatch { expected: center.len(), found: radii.len() });
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidParameter("bump radii must be positive".into()));
        }
        let lo = center.iter().zip(&radii).map(|(c, r)| c - r).collect();
        let hi = center.iter().zip(&radii).map(|(c, r)| c + r).collect();
        Ok(Self { support: BoxDomain::new(lo, hi)?, center, radii })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
}

impl Observable for Bump {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for ((xi, c), r) in x.iter().zip(&self.center).zip(&self.radii) {
            v *= profile((xi - c) / r).0;
            if v == 0.0 {
                break;
            }
        }
        v
    }
}

impl TestFunction for Bump {
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        if d > 8 {
            return self.gradient_heap(x, out);
        }
        let mut vals = [0.0; 8];
        let mut ders = [0.0; 8];
        for a in 0..d {
            let (v, dv) = profile((x[a] - self.center[a]) / self.radii[a]);
            vals[a] = v;
            ders[a] = dv / self.radii[a];
        }
        for a in 0..d {
            out[a] = (0..d).map(|b| if a == b { ders[b] } else { vals[b] }).product();
        }
    }

    fn support(&self) -> &BoxDomain {
        &self.support
    }

    fn sup_bound(&self) -> f64 {
        1.0
    }

    fn lebesgue_integral(&self) -> f64 {
        self.radii.iter().map(|r| r * bump_profile_integral()).product()
    }
}

impl Bump {
    fn gradient_heap(&self, x: &[f64], out: &mut [f64]) {
        let parts: Vec<(f64, f64)> = (0..self.dim())
            .map(|a| {
                let (v, dv) = profile((x[a] - self.center[a]) / self.radii[a]);
                (v, dv / self.radii[a])
            })
            .collect();
        for (a, o) in out.iter_mut().enumerate() {
            *o = parts.iter().enumerate().map(|(b, p)| if a == b { p.1 } else { p.0 }).product();
        }
    }
}

/// Ordered family `φ_1, φ_2, …` with sup-norm bounds, used to build the
/// bounded weak metric.
#[derive(Clone)]
pub struct TestFunctionDictionary {
    functions: Vec<Arc<dyn TestFunction>>,
    sup_bounds: Vec<f64>,
}

impl std::fmt::Debug for TestFunctionDictionary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunctionDictionary")
            .field("len", &self.functions.len())
            .field("sup_bounds", &self.sup_bounds)
            .finish()
    }
}

impl TestFunctionDictionary {
    pub fn new(functions: Vec<Arc<dyn TestFunction>>) -> Result<Self> {
        let Some(first) = functions.first() else {
            return Err(Error::InvalidParameter("dictionary must be nonempty".into()));
        };
        let dim = first.dim();
        if let Some(f) = functions.iter().find(|f| f.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: f.dim() });
        }
        let sup_bounds = functions.iter().map(|f| f.sup_bound()).collect();
        Ok(Self { functions, sup_bounds })
    }

    /// Bumps on `levels` dyadic scales of `reference`, coarse to fine.
    ///
    /// Level `ℓ` splits every axis into `2^ℓ` cells and places one bump per
    /// cell, centred in the cell with radius equal to the cell width, so that
    /// neighbouring supports overlap and cover the box.
    pub fn dyadic(reference: &BoxDomain, levels: usize) -> Result<Self> {
        let d = reference.dim();
        let mut functions: Vec<Arc<dyn TestFunction>> = Vec::new();
        for level in 0..levels {
            let m = 1usize << level;
            let widths: Vec<f64> = (0..d).map(|a| reference.width(a) / m as f64).collect();
            let count = m.pow(d as u32);
            for flat in 0..count {
                let mut rem = flat;
                let mut center = vec![0.0; d];
                for a in (0..d).rev() {
                    let k = rem % m;
                    rem /= m;
                    center[a] = reference.lo[a] + (k as f64 + 0.5) * widths[a];
                }
                functions.push(Arc::new(Bump::new(center, widths.clone())?));
            }
        }
        Self::new(functions)
    }

    /// The shipped default: three dyadic scales.
    pub fn default_for(reference: &BoxDomain) -> Result<Self> {
        Self::dyadic(reference, 3)
    }

    pub fn dim(&self) -> usize {
        self.functions[0].dim()
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[Arc<dyn TestFunction>] {
        &self.functions
    }

    pub fn sup_bounds(&self) -> &[f64] {
        &self.sup_bounds
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_integral_matches_reference_value() {
        // ∫_{-1}^{1} exp(-1/(1-s²)) ds = 0.443993816168079437823...
        let expected = std::f64::consts::E * 0.443_993_816_168_079_4;
        assert!((bump_profile_integral() - expected).abs() < 1e-12);
    }

    #[test]
    fn bump_vanishes_outside_support_and_respects_sup() {
        let b = Bump::new(vec![0.5, -1.0], vec![0.25, 2.0]).unwrap();
        assert_eq!(b.value(&[0.5, -1.0]), 1.0);
        assert_eq!(b.value(&[0.76, -1.0]), 0.0);
        assert_eq!(b.value(&[0.5, 1.01]), 0.0);
        let mut g = [1.0; 2];
        b.gradient(&[0.2, 0.0], &mut g);
        assert_eq!(g, [0.0, 0.0]);
        for i in 0..200 {
            let x = [0.2 + 0.6 * i as f64 / 199.0, -3.0 + 4.0 * i as f64 / 199.0];
            assert!(b.value(&x) <= b.sup_bound());
        }
    }

    #[test]
    fn bump_gradient_matches_central_differences() {
        let b = Bump::new(vec![0.1, 0.3], vec![0.7, 0.5]).unwrap();
        let x = [0.35, 0.1];
        let mut g = [0.0; 2];
        b.gradient(&x, &mut g);
        let h = 1e-6;
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let fd = (b.value(&xp) - b.value(&xm)) / (2.0 * h);
            assert!((fd - g[a]).abs() < 1e-7, "axis {a}: {fd} vs {}", g[a]);
        }
    }

    #[test]
    fn dyadic_dictionary_sizes() {
        let unit = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let dict = TestFunctionDictionary::default_for(&unit).unwrap();
        assert_eq!(dict.len(), 1 + 4 + 16);
        assert_eq!(dict.dim(), 2);
        assert!(dict.sup_bounds().iter().all(|&s| s == 1.0));
    }
}
