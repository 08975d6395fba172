//! Closed-form solutions used as independent oracles.
#![allow(dead_code)]

use num_complex::Complex64;

/// Harmonic flow `ẋ = p, ṗ = −ω²x` started at `(x, p)`.
pub fn harmonic_exact(x: f64, p: f64, omega: f64, t: f64) -> (f64, f64) {
    let (s, c) = (omega * t).sin_cos();
    (x * c + p * s / omega, -x * omega * s + p * c)
}

/// Free Schrödinger evolution `iε ψ_t = −ε²/2 ψ_xx` of the normalized packet
/// `(πσ²)^{-1/4} exp(−(x−x0)²/(2σ²) + i p0 x/ε)`.
pub fn free_gaussian(x: f64, t: f64, x0: f64, p0: f64, sigma: f64, eps: f64) -> Complex64 {
    let i = Complex64::i();
    let width = Complex64::new(sigma * sigma, eps * t);
    let amp = (std::f64::consts::PI * sigma * sigma).powf(-0.25) * sigma / width.sqrt();
    let shift = x - x0 - p0 * t;
    amp * (-(shift * shift) / (2.0 * width) + i * p0 * (x - 0.5 * p0 * t) / eps).exp()
}

/// Gaussian density on `R^d` with identity covariance scaled by `σ²`.
pub fn gaussian_density(z: &[f64], center: &[f64], sigma: f64) -> f64 {
    let r2: f64 = z.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
    (2.0 * std::f64::consts::PI * sigma * sigma).powf(-(z.len() as f64) / 2.0) * (-0.5 * r2 / (sigma * sigma)).exp()
}
