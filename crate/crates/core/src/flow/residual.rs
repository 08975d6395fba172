use crate::fields::PhaseSpaceField;
use crate::{Error, Result};

use super::Trajectory;

/// Cumulative integrals `I_k ≈ ∫_0^{t_k} f` of uniformly sampled `f` (flat,
/// `dim` components per sample): composite Simpson on even indices, Simpson
/// plus a 3/8 panel on odd ones, and a quadratic start rule for `k = 1`.
pub fn cumulative_simpson(f: &[f64], dim: usize, h: f64) -> Vec<f64> {
    let n = f.len() / dim;
    let mut out = vec![0.0; f.len()];
    let at = |k: usize, i: usize| f[k * dim + i];
    for k in 1..n {
        for i in 0..dim {
            out[k * dim + i] = if n == 2 {
                0.5 * h * (at(0, i) + at(1, i))
            } else if k == 1 {
                h / 12.0 * (5.0 * at(0, i) + 8.0 * at(1, i) - at(2, i))
            } else if k % 2 == 0 {
                out[(k - 2) * dim + i] + h / 3.0 * (at(k - 2, i) + 4.0 * at(k - 1, i) + at(k, i))
            } else {
                out[(k - 3) * dim + i]
                    + 3.0 * h / 8.0 * (at(k - 3, i) + 3.0 * at(k - 2, i) + 3.0 * at(k - 1, i) + at(k, i))
            };
        }
    }
    out
}

/// `max_k |X(t_k) − X(0) − ∫_0^{t_k} b(X(s)) ds|` on the trajectory's own
/// (uniform) grid.
pub fn ode_residual(traj: &Trajectory, b: &PhaseSpaceField) -> Result<f64> {
    if !traj.is_complete() {
        return Err(Error::IncompleteTrajectory(format!("status {}", traj.status().label())));
    }
    let dim = traj.dim();
    if dim != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), found: dim });
    }
    let times = traj.times();
    if times.len() < 2 {
        return Ok(0.0);
    }
    let h = times[1] - times[0];
    let span = times[times.len() - 1];
    if times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * span.max(1.0)) {
        return Err(Error::Resolution("ode_residual needs a uniform time grid".into()));
    }
    let mut f = vec![0.0; traj.states().len()];
    for k in 0..traj.len() {
        b.eval_into(traj.state(k), &mut f[k * dim..(k + 1) * dim])?;
    }
    let integral = cumulative_simpson(&f, dim, h);
    let z0 = traj.initial();
    let mut worst = 0.0f64;
    for k in 1..traj.len() {
        let z = traj.state(k);
        let r: f64 = (0..dim)
            .map(|i| {
                let e = z[i] - z0[i] - integral[k * dim + i];
                e * e
            })
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_simpson_is_exact_for_cubics() {
        let h = 0.1;
        let f: Vec<f64> = (0..11).map(|k| (k as f64 * h).powi(3)).collect();
        let i = cumulative_simpson(&f, 1, h);
        for k in 2..11 {
            let t = k as f64 * h;
            assert!((i[k] - t.powi(4) / 4.0).abs() < 1e-14, "k={k}");
        }
        // the start rule is exact for quadratics
        let g: Vec<f64> = (0..5).map(|k| (k as f64 * h).powi(2)).collect();
        assert!((cumulative_simpson(&g, 1, h)[1] - h.powi(3) / 3.0).abs() < 1e-16);
    }
}
