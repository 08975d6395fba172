use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::WaveFunction;
use crate::measures::{weak_distance, BoxDomain, GridDensity, ParticleMeasure, TestFunctionDictionary};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Wigner,
    Husimi,
}

/// Real function on a tensor grid of `(x, p)` cell centres, `values[i·P + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceDensity {
    pub kind: TransformKind,
    pub eps: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub dx: f64,
    pub dp: f64,
    pub values: Vec<f64>,
    /// Largest discarded imaginary part (Wigner only).
    pub imaginary_residual: f64,
}

impl PhaseSpaceDensity {
    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.p.len() + k]
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dp
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫ · dp` at each `x_i`.
    pub fn x_marginal(&self) -> Vec<f64> {
        self.values.chunks_exact(self.p.len()).map(|row| row.iter().sum::<f64>() * self.dp).collect()
    }

    /// `∫ · dx` at each `p_k`.
    pub fn p_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.p.len()];
        for row in self.values.chunks_exact(self.p.len()) {
            out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
        }
        out.iter_mut().for_each(|o| *o *= self.dx);
        out
    }

    /// `(⟨x⟩, ⟨p⟩)`.
    pub fn centroid(&self) -> (f64, f64) {
        let m: f64 = self.values.iter().sum();
        let mut cx = 0.0;
        let mut cp = 0.0;
        for (i, row) in self.values.chunks_exact(self.p.len()).enumerate() {
            for (k, v) in row.iter().enumerate() {
                cx += v * self.x[i];
                cp += v * self.p[k];
            }
        }
        (cx / m, cp / m)
    }

    pub fn domain(&self) -> Result<BoxDomain> {
        BoxDomain::new(
            vec![self.x[0] - 0.5 * self.dx, self.p[0] - 0.5 * self.dp],
            vec![self.x[self.x.len() - 1] + 0.5 * self.dx, self.p[self.p.len() - 1] + 0.5 * self.dp],
        )
    }

    /// As a nonnegative grid density (negative values are an error).
    pub fn to_grid(&self) -> Result<GridDensity> {
        GridDensity::new(self.domain()?, vec![self.x.len(), self.p.len()], self.values.clone())
    }
}

/// `|ψ̂(p)|²` at `p_j = ε k_j` (FFT order), `ψ̂(p) = (2πε)^{-1/2} ∫ψ(x) e^{−ipx/ε} dx`.
pub fn momentum_density(psi: &WaveFunction) -> (Vec<f64>, Vec<f64>) {
    let grid = psi.grid();
    let mut buf = psi.values().to_vec();
    FftPlanner::new().plan_fft_forward(grid.points).process(&mut buf);
    let scale = grid.dx() * grid.dx() / (2.0 * PI * psi.eps());
    let p = (0..grid.points).map(|j| psi.eps() * grid.wavenumber(j)).collect();
    (p, buf.iter().map(|v| v.norm_sqr() * scale).collect())
}

/// `|ψ̂(p)|²` at arbitrary momenta, by direct summation.
pub fn momentum_density_at(psi: &WaveFunction, ps: &[f64]) -> Vec<f64> {
    let grid = psi.grid();
    let eps = psi.eps();
    let scale = grid.dx() * grid.dx() / (2.0 * PI * eps);
    ps.iter()
        .map(|&p| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in psi.values().iter().enumerate() {
                acc += v * Complex64::from_polar(1.0, -p * grid.x(j) / eps);
            }
            acc.norm_sqr() * scale
        })
        .collect()
}

/// Indices `[first, last]` where `|ψ| > rel · max|ψ|`.
fn support(psi: &WaveFunction, rel: f64) -> (usize, usize) {
    let amp: Vec<f64> = psi.values().iter().map(|v| v.norm()).collect();
    let thr = rel * amp.iter().copied().fold(0.0, f64::max);
    let first = amp.iter().position(|a| *a > thr).unwrap_or(0);
    let last = amp.iter().rposition(|a| *a > thr).unwrap_or(amp.len() - 1);
    (first, last)
}

/// Mass of `|ψ̂|²` with `|p| ≥ cut`.
fn momentum_tail(p: &[f64], rho: &[f64], dp: f64, cut: f64) -> f64 {
    p.iter().zip(rho).filter(|(p, _)| p.abs() >= cut).map(|(_, r)| r * dp).sum()
}

/// Wigner transform `W(x,p) = (2π)^{-1} ∫ ψ(x + εy/2) ψ̄(x − εy/2) e^{−ip·y} dy`
/// on rows `x_j` of the support of `ψ` and momenta `p_k = πεk/(K dx)`.
///
/// Rows are taken every `r` grid points, with `r` the largest power of two
/// that keeps the momentum mass beyond `0.9 · πε/(2 r dx)` below `1e-12`;
/// `dx` of the result is the row spacing. On those rows the x-marginal is
/// exact and the p-marginal equals `|ψ̂(p)|² + |ψ̂(p − πε/dx)|²`.
pub fn wigner(psi: &WaveFunction) -> Result<PhaseSpaceDensity> {
    let layout = WignerLayout::new(psi)?;
    let k_len = layout.k_len;
    let mut values = vec![0.0; layout.rows.len() * k_len];
    let imaginary_residual = layout.for_each_row(psi, |j, row| {
        values[j * k_len..(j + 1) * k_len].copy_from_slice(row);
    });
    let grid = psi.grid();
    Ok(PhaseSpaceDensity {
        kind: TransformKind::Wigner,
        eps: psi.eps(),
        x: layout.rows.iter().map(|&j| grid.x(j)).collect(),
        p: (0..k_len).map(|k| (k as i64 - layout.half) as f64 * layout.dp).collect(),
        dx: layout.dx,
        dp: layout.dp,
        values,
        imaginary_residual,
    })
}

/// Marginal errors of the Wigner transform of `ψ`, as [`wigner_marginal_errors`]
/// on [`wigner`], without storing the density. Returns `(x, p, imaginary)`.
pub fn wigner_identity_errors(psi: &WaveFunction) -> Result<(f64, f64, f64)> {
    let layout = WignerLayout::new(psi)?;
    let mut x_marginal = vec![0.0; layout.rows.len()];
    let mut p_marginal = vec![0.0; layout.k_len];
    let imaginary = layout.for_each_row(psi, |j, row| {
        x_marginal[j] = row.iter().sum::<f64>() * layout.dp;
        p_marginal.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    });
    p_marginal.iter_mut().for_each(|m| *m *= layout.dx);
    let (xe, pe) = marginal_errors(psi, &layout.rows, layout.dx, &x_marginal, &p_marginal);
    Ok((xe, pe, imaginary))
}

struct WignerLayout {
    rows: Vec<usize>,
    dx: f64,
    dp: f64,
    k_len: usize,
    half: i64,
}

impl WignerLayout {
    fn new(psi: &WaveFunction) -> Result<Self> {
        let grid = psi.grid();
        let (h, eps) = (grid.dx(), psi.eps());
        let (ps, rho) = momentum_density(psi);
        let dq = eps * PI / grid.half_width;
        let tail_at = |r: usize| momentum_tail(&ps, &rho, dq, 0.9 * PI * eps / (2.0 * r as f64 * h));
        let tail = tail_at(1);
        if tail > 1e-12 {
            let p_max = PI * eps / (2.0 * h);
            return Err(Error::Resolution(format!(
                "momentum mass {tail:.2e} beyond the Wigner window |p| < {p_max:.3}; refine the grid"
            )));
        }
        let mut r = 1;
        while grid.points / (2 * r) >= 8 && tail_at(2 * r) <= 1e-12 {
            r *= 2;
        }
        let dx = r as f64 * h;
        let (first, last) = support(psi, 1e-10);
        let rows: Vec<usize> = (first..grid.points).step_by(r).take_while(|&j| j < last + r).collect();
        let k_len = smooth_length((rows.len() + 1).max(8));
        Ok(Self { rows, dx, dp: PI * eps / (k_len as f64 * dx), k_len, half: (k_len / 2) as i64 })
    }

    /// Calls `visit(i, W(x_i, ·))` for every row. Rows are transformed in
    /// pairs packed as `a + i b`: both autocorrelations are Hermitian in the
    /// lag, so their transforms are the real and imaginary parts. The centre
    /// row goes alone; its imaginary part (pure rounding) is returned.
    fn for_each_row(&self, psi: &WaveFunction, mut visit: impl FnMut(usize, &[f64])) -> f64 {
        let (k_len, half) = (self.k_len, self.half);
        let width = self.rows.len();
        let v: Vec<Complex64> = self.rows.iter().map(|&j| psi.values()[j]).collect();
        let fft = FftPlanner::new().plan_fft_forward(k_len);
        let mut buf = vec![Complex64::new(0.0, 0.0); k_len];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let (mut re, mut im) = (vec![0.0; k_len], vec![0.0; k_len]);
        let scale = self.dx / (PI * psi.eps());
        let fill = |buf: &mut [Complex64], j: usize, w: Complex64| {
            let reach = j.min(width - 1 - j) as i64;
            for m in -reach.min(half - 1)..=reach.min(half - 1) {
                let a = v[(j as i64 + m) as usize] * v[(j as i64 - m) as usize].conj();
                buf[m.rem_euclid(k_len as i64) as usize] += w * a;
            }
        };
        let centre = width / 2;
        let mut imaginary = 0.0f64;
        let mut pending: Option<usize> = None;
        for j in (0..width).filter(|&j| j != centre).chain(std::iter::once(centre)) {
            let partner = if j == centre { None } else { pending.take() };
            if j != centre && partner.is_none() {
                pending = Some(j);
                continue;
            }
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            fill(&mut buf, j, Complex64::new(1.0, 0.0));
            if let Some(i) = partner {
                fill(&mut buf, i, Complex64::new(0.0, 1.0));
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..k_len {
                // output index k ↔ frequency k − ⌊K/2⌋
                let f = buf[(k as i64 - half).rem_euclid(k_len as i64) as usize];
                re[k] = scale * f.re;
                im[k] = scale * f.im;
            }
            match partner {
                Some(i) => {
                    visit(j, &re);
                    visit(i, &im);
                }
                None => {
                    imaginary = im.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
                    visit(j, &re);
                }
            }
        }
        if let Some(j) = pending {
            // odd count without the centre: one row left over
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            fill(&mut buf, j, Complex64::new(1.0, 0.0));
            fft.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..k_len {
                re[k] = scale * buf[(k as i64 - half).rem_euclid(k_len as i64) as usize].re;
            }
            visit(j, &re);
        }
        imaginary
    }
}

/// Smallest `2^a 3^b 5^c ≥ n`, an efficient FFT length.
fn smooth_length(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p5 = 1;
    while p5 < best {
        let mut p3 = p5;
        while p3 < best {
            let mut m = p3;
            while m < n {
                m *= 2;
            }
            best = best.min(m);
            p3 *= 3;
        }
        p5 *= 5;
    }
    best
}

/// Rectangular `(x, p)` box with cell-centred samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBox {
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub p_lo: f64,
    pub p_hi: f64,
    pub np: usize,
}

impl PhaseBox {
    /// Covers the mass of `|ψ|²` and `|ψ̂|²` (tails below `1e-13`) padded by
    /// eight Husimi widths, with cells of about `√(ε/2)/1.5`.
    pub fn adaptive(psi: &WaveFunction) -> Self {
        let cell = husimi_cell(psi.eps());
        let ((x_lo, x_hi, nx), (pl, ph)) = adaptive_ranges(psi, cell);
        let pad = 8.0 * (0.5 * psi.eps()).sqrt();
        let np = (((ph - pl) + 2.0 * pad) / cell).ceil().max(1.0) as usize;
        let mid = 0.5 * (pl + ph);
        Self { x_lo, x_hi, nx, p_lo: mid - 0.5 * np as f64 * cell, p_hi: mid + 0.5 * np as f64 * cell, np }
    }
}

fn husimi_cell(eps: f64) -> f64 {
    (0.5 * eps).sqrt() / 1.5
}

fn husimi_window(eps: f64) -> f64 {
    9.0 * eps.sqrt()
}

/// Padded x-range fitted to `cell`, and the unpadded momentum quantile range.
fn adaptive_ranges(psi: &WaveFunction, cell: f64) -> ((f64, f64, usize), (f64, f64)) {
    let pad = 8.0 * (0.5 * psi.eps()).sqrt();
    let xs = psi.grid().xs();
    let (xl, xh) = quantiles(&xs, &psi.position_density(), 1e-13);
    let (mut ps, rho) = momentum_density(psi);
    let mut pairs: Vec<(f64, f64)> = ps.drain(..).zip(rho).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (ps, rho): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (pl, ph) = quantiles(&ps, &rho, 1e-13);
    let nx = (((xh - xl) + 2.0 * pad) / cell).ceil().max(1.0) as usize;
    let mid = 0.5 * (xl + xh);
    ((mid - 0.5 * nx as f64 * cell, mid + 0.5 * nx as f64 * cell, nx), (pl, ph))
}

fn quantiles(x: &[f64], w: &[f64], tail: f64) -> (f64, f64) {
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    let mut lo = x[0];
    for (xi, wi) in x.iter().zip(w) {
        acc += wi;
        if acc > tail * total {
            lo = *xi;
            break;
        }
    }
    acc = 0.0;
    let mut hi = x[x.len() - 1];
    for (xi, wi) in x.iter().zip(w).rev() {
        acc += wi;
        if acc > tail * total {
            hi = *xi;
            break;
        }
    }
    (lo, hi)
}

/// Husimi transform on an adaptive box (see [`PhaseBox::adaptive`]) whose
/// momentum cells sit on the lattice `2πε/(M dx)` of a length-`M` FFT, so
/// each row costs one transform; agrees with [`husimi_on`] on that box.
pub fn husimi(psi: &WaveFunction) -> Result<PhaseSpaceDensity> {
    let grid = psi.grid();
    let (h, eps) = (grid.dx(), psi.eps());
    let cell = husimi_cell(eps);
    let ((x_lo, x_hi, nx), (pl, ph)) = adaptive_ranges(psi, cell);
    let window = husimi_window(eps);
    let span = (2.0 * window / h).ceil() as usize + 2;
    let m = span.max((2.0 * PI * eps / (h * cell)).ceil() as usize).next_power_of_two();
    let dp = 2.0 * PI * eps / (m as f64 * h);
    let pad = 8.0 * (0.5 * eps).sqrt();
    // momentum bins q with p = q·dp, kept below the grid's Nyquist momentum
    let q_max = (m / 2) as i64 - 1;
    let q_lo = (((pl - pad) / dp).floor() as i64).max(-q_max);
    let q_hi = (((ph + pad) / dp).ceil() as i64).min(q_max);
    let np = (q_hi - q_lo + 1) as usize;
    let dx = (x_hi - x_lo) / nx as f64;
    let xs: Vec<f64> = (0..nx).map(|i| x_lo + (i as f64 + 0.5) * dx).collect();
    let ps: Vec<f64> = (q_lo..=q_hi).map(|q| q as f64 * dp).collect();
    let norm = (PI * eps).powf(-0.25) * h;
    let v = psi.values();
    let fft = FftPlanner::new().plan_fft_forward(m);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut values = vec![0.0; nx * np];
    for (i, &x) in xs.iter().enumerate() {
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        let lo = (((x - window + grid.half_width) / h).floor().max(0.0)) as usize;
        let hi = ((((x + window + grid.half_width) / h).ceil()) as usize).min(grid.points - 1);
        if lo <= hi {
            for (b, j) in buf.iter_mut().zip(lo..=hi) {
                let u = grid.x(j) - x;
                *b = v[j] * (norm * (-0.5 * u * u / eps).exp());
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        // |Σ f_j e^{−ip(x_j − x)/ε}|² = |Σ_k f_{lo+k} e^{−2πiqk/M}|²
        let row = &mut values[i * np..(i + 1) * np];
        for (o, q) in row.iter_mut().zip(q_lo..=q_hi) {
            *o = buf[q.rem_euclid(m as i64) as usize].norm_sqr() / (2.0 * PI * eps);
        }
    }
    Ok(PhaseSpaceDensity {
        kind: TransformKind::Husimi,
        eps,
        x: xs,
        p: ps,
        dx,
        dp,
        values,
        imaginary_residual: 0.0,
    })
}

impl PhaseSpaceDensity {
    /// The cell-centred box this density is sampled on.
    pub fn phase_box(&self) -> PhaseBox {
        PhaseBox {
            x_lo: self.x[0] - 0.5 * self.dx,
            x_hi: self.x[self.x.len() - 1] + 0.5 * self.dx,
            nx: self.x.len(),
            p_lo: self.p[0] - 0.5 * self.dp,
            p_hi: self.p[self.p.len() - 1] + 0.5 * self.dp,
            np: self.p.len(),
        }
    }
}

/// `H(x,p) = |⟨g_{x,p}, ψ⟩|² / (2πε)` with coherent states
/// `g_{x,p}(y) = (πε)^{-1/4} e^{−(y−x)²/2ε + ip(y−x)/ε}`; equivalently the
/// Wigner function smoothed by the Gaussian of variances `(ε/2, ε/2)`.
pub fn husimi_on(psi: &WaveFunction, b: &PhaseBox) -> Result<PhaseSpaceDensity> {
    if b.nx == 0 || b.np == 0 || !(b.x_hi > b.x_lo) || !(b.p_hi > b.p_lo) {
        return Err(Error::InvalidParameter("empty Husimi box".into()));
    }
    let grid = psi.grid();
    let eps = psi.eps();
    let (dx, dp) = ((b.x_hi - b.x_lo) / b.nx as f64, (b.p_hi - b.p_lo) / b.np as f64);
    let xs: Vec<f64> = (0..b.nx).map(|i| b.x_lo + (i as f64 + 0.5) * dx).collect();
    let ps: Vec<f64> = (0..b.np).map(|k| b.p_lo + (k as f64 + 0.5) * dp).collect();
    let h = grid.dx();
    let window = husimi_window(eps);
    let norm = (PI * eps).powf(-0.25) * h;
    let v = psi.values();
    let mut values = vec![0.0; b.nx * b.np];
    let mut f = Vec::new();
    let mut rot = Vec::new();
    let mut step = Vec::new();
    let mut acc = vec![Complex64::new(0.0, 0.0); b.np];
    for (i, &x) in xs.iter().enumerate() {
        let lo = (((x - window + grid.half_width) / h).floor().max(0.0)) as usize;
        let hi = ((((x + window + grid.half_width) / h).ceil()) as usize).min(grid.points - 1);
        f.clear();
        rot.clear();
        step.clear();
        if lo <= hi {
            for j in lo..=hi {
                let u = grid.x(j) - x;
                let g = norm * (-0.5 * u * u / eps).exp();
                f.push(v[j] * g);
                rot.push(Complex64::from_polar(1.0, -ps[0] * u / eps));
                step.push(Complex64::from_polar(1.0, -dp * u / eps));
            }
        }
        acc.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for (k, a) in acc.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for ((fj, r), st) in f.iter().zip(rot.iter_mut()).zip(&step) {
                s += fj * *r;
                if k + 1 < b.np {
                    *r *= st;
                }
            }
            *a = s;
        }
        for (k, a) in acc.iter().enumerate() {
            values[i * b.np + k] = a.norm_sqr() / (2.0 * PI * eps);
        }
    }
    Ok(PhaseSpaceDensity {
        kind: TransformKind::Husimi,
        eps,
        x: xs,
        p: ps,
        dx,
        dp,
        values,
        imaginary_residual: 0.0,
    })
}

/// One particle per cell with `H ≥ threshold · max H`, rescaled so the total
/// equals `∫ H`.
pub fn husimi_to_measure(h: &PhaseSpaceDensity, threshold: f64) -> Result<ParticleMeasure> {
    let max = h.max_value();
    if !(max > 0.0) {
        return Err(Error::ZeroMass);
    }
    let cut = threshold * max;
    let area = h.cell_area();
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (i, x) in h.x.iter().enumerate() {
        for (k, p) in h.p.iter().enumerate() {
            let v = h.value(i, k);
            if v >= cut && v > 0.0 {
                coords.extend_from_slice(&[*x, *p]);
                weights.push(v * area);
            }
        }
    }
    let kept: f64 = weights.iter().sum();
    let total = h.values.iter().filter(|v| **v > 0.0).sum::<f64>() * area;
    weights.iter_mut().for_each(|w| *w *= total / kept);
    ParticleMeasure::new(2, coords, weights)
}

/// The dictionary metric on phase space used in place of the dual norm.
pub fn phase_space_dictionary(reference: &BoxDomain) -> Result<TestFunctionDictionary> {
    TestFunctionDictionary::default_for(reference)
}

pub fn dual_distance(a: &ParticleMeasure, b: &ParticleMeasure, dict: &TestFunctionDictionary) -> Result<f64> {
    weak_distance(a, b, dict)
}

/// `(max |∫W dp − |ψ|²|, max |∫W dx − |ψ̂|²|)` on the rows and momenta of `w`.
pub fn wigner_marginal_errors(psi: &WaveFunction, w: &PhaseSpaceDensity) -> (f64, f64) {
    let h = psi.grid().dx();
    let r = (w.dx / h).round() as usize;
    let j0 = ((w.x[0] + psi.grid().half_width) / h).round() as usize;
    let rows: Vec<usize> = (0..w.x.len()).map(|i| j0 + r * i).collect();
    marginal_errors(psi, &rows, w.dx, &w.x_marginal(), &w.p_marginal())
}

fn marginal_errors(psi: &WaveFunction, rows: &[usize], dx: f64, x_marginal: &[f64], p_marginal: &[f64]) -> (f64, f64) {
    let x_err = x_marginal
        .iter()
        .zip(rows)
        .map(|(m, &j)| (m - psi.values()[j].norm_sqr()).abs())
        .fold(0.0, f64::max);

    // |ψ̂(p_k)|² with p_k = πεk/(K dx): a length-2K transform of the rows
    let k_len = p_marginal.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * k_len];
    for (a, &j) in buf.iter_mut().zip(rows) {
        *a = psi.values()[j];
    }
    FftPlanner::new().plan_fft_forward(2 * k_len).process(&mut buf);
    let scale = dx * dx / (2.0 * PI * psi.eps());
    let half = (k_len / 2) as i64;
    let p_err = p_marginal
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let q = (k as i64 - half).rem_euclid(2 * k_len as i64) as usize;
            (m - scale * buf[q].norm_sqr()).abs()
        })
        .fold(0.0, f64::max);
    (x_err, p_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{wkb_initial, Envelope, Grid1d, WkbParams};

    fn coherent(eps: f64, q: f64, p: f64, points: usize) -> WaveFunction {
        let params = WkbParams { x0: q, p0: p, alpha: 0.5, envelope: Envelope::Gaussian { sigma: 1.0 }, eps };
        wkb_initial(&params, &Grid1d::new(6.0, points).unwrap()).unwrap()
    }

    #[test]
    fn coherent_state_wigner_is_the_gaussian() {
        let (eps, q, p) = (0.1, 0.5, -0.7);
        let psi = coherent(eps, q, p, 1024);
        let w = wigner(&psi).unwrap();
        let mut err = 0.0f64;
        for (i, x) in w.x.iter().enumerate() {
            for (k, pk) in w.p.iter().enumerate() {
                let exact = ((-(x - q).powi(2) - (pk - p).powi(2)) / eps).exp() / (PI * eps);
                err = err.max((w.value(i, k) - exact).abs());
            }
        }
        assert!(err < 1e-8, "{err}");
        assert!(w.imaginary_residual < 1e-12);
        let (xe, pe) = wigner_marginal_errors(&psi, &w);
        assert!(xe < 1e-8 && pe < 1e-6, "{xe} {pe}");
    }

    #[test]
    fn coherent_state_husimi_is_the_wider_gaussian() {
        let (eps, q, p) = (0.1, -0.3, 0.4);
        let psi = coherent(eps, q, p, 1024);
        let h = husimi(&psi).unwrap();
        let mut err = 0.0f64;
        for (i, x) in h.x.iter().enumerate() {
            for (k, pk) in h.p.iter().enumerate() {
                let exact = ((-(x - q).powi(2) - (pk - p).powi(2)) / (2.0 * eps)).exp() / (2.0 * PI * eps);
                err = err.max((h.value(i, k) - exact).abs());
            }
        }
        assert!(err < 1e-8, "{err}");
        assert!((h.integral() - 1.0).abs() < 1e-6);
        assert!(h.min_value() >= -1e-12);
        let (cx, cp) = h.centroid();
        assert!((cx - q).abs() < 1e-6 && (cp - p).abs() < 1e-6);
    }

    #[test]
    fn fft_husimi_matches_direct_sums() {
        let params = WkbParams { x0: 0.4, p0: 0.9, alpha: 0.5, envelope: Envelope::default(), eps: 0.1 };
        let psi0 = wkb_initial(&params, &Grid1d::new(5.0, 1024).unwrap()).unwrap();
        let psi = crate::quantum::evolve(&psi0, &crate::fields::Potential::harmonic(1, 1.0), 1e-2, 40).unwrap();
        let fast = husimi(&psi).unwrap();
        let slow = husimi_on(&psi, &fast.phase_box()).unwrap();
        assert_eq!(fast.values.len(), slow.values.len());
        let err = fast.values.iter().zip(&slow.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12 * fast.max_value().max(1.0), "{err}");
    }

    #[test]
    fn wigner_marginals_hold_for_odd_and_even_lengths() {
        let mut odd = 0;
        for points in (640..1600).step_by(16) {
            let psi = coherent(0.1, 0.2, 0.3, points);
            let w = wigner(&psi).unwrap();
            odd += w.p.len() % 2;
            let (xe, pe) = wigner_marginal_errors(&psi, &w);
            assert!(xe < 1e-8 && pe < 1e-6, "K {} {xe} {pe}", w.p.len());
        }
        assert!(odd > 0);
    }

    #[test]
    fn streamed_identity_errors_match_the_stored_density() {
        for points in [1024, 1056] {
            let psi = coherent(0.1, 0.4, -0.2, points);
            let w = wigner(&psi).unwrap();
            let (xe, pe) = wigner_marginal_errors(&psi, &w);
            let (xs, ps, im) = wigner_identity_errors(&psi).unwrap();
            assert!((xe - xs).abs() < 1e-12 && (pe - ps).abs() < 1e-12, "{xe} {xs} {pe} {ps}");
            assert!(im < 1e-12 && im <= w.imaginary_residual + 1e-18);
        }
    }

    #[test]
    fn smooth_lengths() {
        assert_eq!(smooth_length(8), 8);
        assert_eq!(smooth_length(2049), 2160);
        assert_eq!(smooth_length(97), 100);
        assert_eq!(smooth_length(1025), 1080);
    }

    #[test]
    fn underresolved_wigner_is_rejected() {
        let grid = Grid1d::new(4.0, 64).unwrap();
        let psi = WaveFunction::from_fn(grid, 0.05, |x| Complex64::from_polar((-x * x).exp(), 1.5 * x / 0.05))
            .unwrap()
            .normalized()
            .unwrap();
        assert!(matches!(wigner(&psi), Err(Error::Resolution(_))));
    }

    #[test]
    fn thresholded_measure_keeps_total_mass() {
        let psi = coherent(0.2, 0.0, 1.0, 512);
        let h = husimi(&psi).unwrap();
        let full = husimi_to_measure(&h, 0.0).unwrap();
        let cut = husimi_to_measure(&h, 1e-3).unwrap();
        assert!(cut.len() < full.len());
        assert!((cut.total_mass() - full.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn momentum_density_direct_matches_fft() {
        let psi = coherent(0.2, 0.3, 0.5, 512);
        let (p, rho) = momentum_density(&psi);
        let direct = momentum_density_at(&psi, &p[..20]);
        for (a, b) in rho[..20].iter().zip(&direct) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
