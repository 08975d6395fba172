use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fields::{decay_integrand, PhaseSpaceField, SingularSet};
use crate::measures::{weak_distance, TestFunction, TestFunctionDictionary};
use crate::{Error, Result};

use super::residual::{check_margin, pairings};
use super::{MeasureCurve, TimeBump, DEFAULT_MARGIN};

/// `w ↦ μ_n(·, i_n(w))` for a finite sample of `w` with weights `P(w)`.
#[derive(Debug, Clone)]
pub struct CurveFamily {
    pub weights: Vec<f64>,
    pub curves: Vec<MeasureCurve>,
}

impl CurveFamily {
    pub fn new(weights: Vec<f64>, curves: Vec<MeasureCurve>) -> Result<Self> {
        if weights.len() != curves.len() {
            return Err(Error::IndexMismatch(format!("{} weights for {} curves", weights.len(), curves.len())));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter("family weights must be nonnegative".into()));
        }
        if let Some(c) = curves.first() {
            if curves.iter().any(|o| o.times() != c.times() || o.dim() != c.dim()) {
                return Err(Error::IndexMismatch("family curves must share time grid and dimension".into()));
            }
        }
        Ok(Self { weights, curves })
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        self.curves[0].times()
    }

    fn nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyEnsemble)
        } else {
            Ok(())
        }
    }
}

fn trapezoid(times: &[f64], y: &[f64]) -> f64 {
    times.windows(2).zip(y.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Nonincreasing along the sequence (after flooring).
fn nonincreasing(v: &[f64], floor: f64) -> bool {
    v.windows(2).all(|w| w[1].max(floor) <= w[0].max(floor))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityStat {
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

/// `sup_{t, φ} Σ_w P(w) ∫φ dμ(t, w) / ∫φ dx` against `C (1 + slack)`.
pub fn uniform_regularity_stat(
    family: &CurveFamily,
    phis: &[Arc<dyn TestFunction>],
    bound: f64,
    slack: f64,
) -> Result<RegularityStat> {
    family.nonempty()?;
    if !(bound > 0.0) {
        return Err(Error::InvalidParameter("regularity bound must be positive".into()));
    }
    let mut value = 0.0f64;
    for phi in phis {
        let mass = phi.lebesgue_integral();
        for k in 0..family.times().len() {
            let mut acc = 0.0;
            for (w, c) in family.weights.iter().zip(&family.curves) {
                acc += w * c.slice(k).integrate_test(phi.as_ref())?;
            }
            value = value.max(acc / mass);
        }
    }
    Ok(RegularityStat { value, bound, slack, pass: value <= bound * (1.0 + slack) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayStat {
    pub beta: f64,
    pub radius: f64,
    pub deltas: Vec<f64>,
    /// `values[i][n]`: the decay integral at `deltas[i]` for family `n`.
    pub values: Vec<Vec<f64>>,
    /// `sup_δ` of the last-family values.
    pub sup: f64,
    /// max/min of the last-family values across δ (1 when all vanish).
    pub spread: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// `Σ_w P(w) ∫_0^T ∫_{B_R} (dist^β(x,S) + δ)^{-1} dμ_n(t,w) dt` for every δ and `n`.
pub fn decay_stat(
    families: &[CurveFamily],
    singular: &SingularSet,
    n_space: usize,
    beta: f64,
    deltas: &[f64],
    radius: f64,
    threshold: f64,
) -> Result<DecayStat> {
    if families.is_empty() || deltas.is_empty() {
        return Err(Error::InvalidParameter("decay statistic needs families and deltas".into()));
    }
    let mut values = vec![Vec::with_capacity(families.len()); deltas.len()];
    for fam in families {
        fam.nonempty()?;
        let times = fam.times();
        for (i, &delta) in deltas.iter().enumerate() {
            let mut total = 0.0;
            for (w, c) in fam.weights.iter().zip(&fam.curves) {
                let per_t = c
                    .slices()
                    .iter()
                    .map(|mu| {
                        let mut acc = 0.0;
                        for (z, m) in mu.points().zip(mu.weights()) {
                            if z.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
                                acc += m * decay_integrand(singular, &z[..n_space], beta, delta)?;
                            }
                        }
                        Ok(acc)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                total += w * trapezoid(times, &per_t);
            }
            values[i].push(total);
        }
    }
    let last: Vec<f64> = values.iter().map(|v| v[v.len() - 1]).collect();
    let sup = last.iter().copied().fold(0.0, f64::max);
    let min = last.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if sup == 0.0 { 1.0 } else { sup / min };
    Ok(DecayStat {
        beta,
        radius,
        deltas: deltas.to_vec(),
        values,
        sup,
        spread,
        threshold,
        pass: sup <= threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessStat {
    /// Tolerance `ε` (space) or unused (time).
    pub level: f64,
    pub params: Vec<f64>,
    pub fractions: Vec<f64>,
    pub threshold: f64,
    pub pass: bool,
}

/// P-fraction of members with `sup_t μ(t)(R^d \ B_R) > ε`, for each `R`.
pub fn space_tightness_stat(family: &CurveFamily, eps: f64, radii: &[f64], threshold: f64) -> Result<TightnessStat> {
    family.nonempty()?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("tightness level must be positive, got {eps}")));
    }
    let total: f64 = family.weights.iter().sum();
    let fractions = radii
        .iter()
        .map(|&r| {
            let bad: f64 = family
                .weights
                .iter()
                .zip(&family.curves)
                .filter(|(_, c)| {
                    c.slices().iter().any(|mu| {
                        let outside: f64 = mu
                            .points()
                            .zip(mu.weights())
                            .filter(|(z, _)| z.iter().map(|v| v * v).sum::<f64>() > r * r)
                            .map(|(_, m)| m)
                            .sum();
                        outside > eps
                    })
                })
                .fold(0.0, |a, (w, _)| a + w);
            bad / total
        })
        .collect::<Vec<_>>();
    let pass = nonincreasing(&fractions, 0.0) && fractions.last().is_some_and(|f| *f <= threshold);
    Ok(TightnessStat { level: eps, params: radii.to_vec(), fractions, threshold, pass })
}

/// `∫_0^T |d/dt ∫φ dμ(t)| dt` with central differences (one-sided at the ends).
pub fn total_variation(curve: &MeasureCurve, phi: &dyn TestFunction) -> Result<f64> {
    let t = curve.times();
    if t.len() < 3 {
        return Err(Error::Resolution("time tightness needs at least 3 samples".into()));
    }
    let y = curve.observe(phi)?;
    let n = t.len();
    let der: Vec<f64> = (0..n)
        .map(|k| {
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            ((y[b] - y[a]) / (t[b] - t[a])).abs()
        })
        .collect();
    Ok(trapezoid(t, &der))
}

/// P-fraction of members whose largest total variation over `phis` exceeds `M`.
pub fn time_tightness_stat(
    family: &CurveFamily,
    phis: &[Arc<dyn TestFunction>],
    ms: &[f64],
    threshold: f64,
) -> Result<TightnessStat> {
    family.nonempty()?;
    let tv = family
        .curves
        .iter()
        .map(|c| phis.iter().map(|p| total_variation(c, p.as_ref())).try_fold(0.0f64, |a, v| Ok::<_, Error>(a.max(v?))))
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = family.weights.iter().sum();
    let fractions: Vec<f64> = ms
        .iter()
        .map(|&m| family.weights.iter().zip(&tv).filter(|(_, v)| **v > m).fold(0.0, |a, (w, _)| a + w) / total)
        .collect();
    let pass = nonincreasing(&fractions, 0.0) && fractions.last().is_some_and(|f| *f <= threshold);
    Ok(TightnessStat { level: 0.0, params: ms.to_vec(), fractions, threshold, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitContinuityStat {
    /// Per family: largest (over test pairs) P-average of the weak residual.
    pub values: Vec<f64>,
    pub floor: f64,
    pub pass: bool,
}

/// For each family `n`: `max_{φ,ϕ} Σ_w P(w) |∫[ϕ' ∫φ dμ_n + ϕ ∫⟨b,∇φ⟩ dμ_n] dt|`.
/// Passes when the sequence is nonincreasing once values below `floor` are
/// identified with it.
pub fn limit_continuity_stat(
    families: &[CurveFamily],
    b: &PhaseSpaceField,
    phis: &[Arc<dyn TestFunction>],
    psis: &[TimeBump],
    floor: f64,
) -> Result<LimitContinuityStat> {
    for phi in phis {
        check_margin(b, phi.as_ref(), DEFAULT_MARGIN)?;
    }
    let mut values = Vec::with_capacity(families.len());
    for fam in families {
        fam.nonempty()?;
        let times = fam.times();
        let total: f64 = fam.weights.iter().sum();
        // pairings are reused across time test functions
        let pair: Vec<Vec<Vec<(f64, f64)>>> = fam
            .curves
            .iter()
            .map(|c| {
                phis.iter()
                    .map(|phi| c.slices().iter().map(|mu| pairings(mu, b, phi.as_ref())).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut worst = 0.0f64;
        for j in 0..phis.len() {
            for psi in psis {
                let mut avg = 0.0;
                for (w, pc) in fam.weights.iter().zip(&pair) {
                    let g: Vec<f64> = times
                        .iter()
                        .zip(&pc[j])
                        .map(|(&t, &(a, c))| {
                            let (v, dv) = psi.eval(t);
                            dv * a + v * c
                        })
                        .collect();
                    avg += w * trapezoid(times, &g).abs();
                }
                worst = worst.max(avg / total);
            }
        }
        values.push(worst);
    }
    let pass = nonincreasing(&values, floor);
    Ok(LimitContinuityStat { values, floor, pass })
}

/// `Σ_w P(w) sup_t d(μ_n(t,w), μ(t,w))`.
pub fn stability_gap(family: &CurveFamily, reference: &CurveFamily, dict: &TestFunctionDictionary) -> Result<f64> {
    if family.len() != reference.len() {
        return Err(Error::IndexMismatch(format!(
            "family has {} members, reference {}",
            family.len(),
            reference.len()
        )));
    }
    if family.weights != reference.weights {
        return Err(Error::IndexMismatch("family and reference carry different weights".into()));
    }
    let mut gap = 0.0;
    for ((w, a), b) in family.weights.iter().zip(&family.curves).zip(&reference.curves) {
        if a.times() != b.times() {
            return Err(Error::IndexMismatch("member curves use different time grids".into()));
        }
        let mut sup = 0.0f64;
        for k in 0..a.len() {
            sup = sup.max(weak_distance(a.slice(k), b.slice(k), dict)?);
        }
        gap += w * sup;
    }
    Ok(gap)
}
