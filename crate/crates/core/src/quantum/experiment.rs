use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::transforms::{husimi, husimi_to_measure, phase_space_dictionary, wigner_identity_errors};
use super::{dual_distance, evolve_sampled, wkb_initial, Envelope, Grid1d, PhaseSpaceDensity, WaveFunction, WkbParams};
use crate::fields::{make_field, FieldSpec, PhaseSpaceField};
use crate::flow::{flow_map, integrate_trajectory, uniform_times, StepControl};
use crate::measures::{
    product_ensemble_at, weak_distance, BoxDomain, Bump, ParticleMeasure, TestFunction, TestFunctionDictionary,
};
use crate::weakform::{
    decay_stat, limit_continuity_stat, space_tightness_stat, stability_gap, time_tightness_stat,
    uniform_regularity_stat, CurveFamily, DecayStat, MeasureCurve, StabilityReport, TimeBump,
};
use crate::{Error, Result};

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

/// `{0.4, 0.2, 0.1, 0.05}`.
pub fn default_eps_list() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSample {
    pub x0: f64,
    pub p0: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionSample {
    pub x0: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

/// Numerical settings shared by the quantum experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantumSettings {
    pub points: usize,
    /// Box half-width `L`; chosen from a ballistic estimate when absent.
    pub half_width: Option<f64>,
    pub dt: f64,
    /// Stored times per direction on `[0, T]`.
    pub time_samples: usize,
    pub husimi_threshold: f64,
    pub classical_dt: f64,
    /// Also run `[−T, 0]` (via `ψ ↦ ψ̄`).
    pub backward: bool,
    /// Wigner/Husimi identities on every produced state.
    pub check_transforms: bool,
}

impl Default for QuantumSettings {
    fn default() -> Self {
        Self {
            points: 4096,
            half_width: None,
            dt: 1e-3,
            time_samples: 17,
            husimi_threshold: 0.0,
            classical_dt: 1e-3,
            backward: true,
            check_transforms: false,
        }
    }
}

/// Worst values of the transform identities over a set of states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformDiagnostics {
    pub states: usize,
    pub wigner_states: usize,
    pub wigner_x_marginal: f64,
    pub wigner_p_marginal: f64,
    pub wigner_imaginary: f64,
    pub husimi_min: f64,
    pub husimi_mass_error: f64,
    pub norm_drift: f64,
    pub boundary_amplitude: f64,
    /// Time spent on the Wigner identity checks, summed over states.
    #[serde(default)]
    pub check_seconds: f64,
}

impl Default for TransformDiagnostics {
    fn default() -> Self {
        Self {
            states: 0,
            wigner_states: 0,
            wigner_x_marginal: 0.0,
            wigner_p_marginal: 0.0,
            wigner_imaginary: 0.0,
            husimi_min: f64::INFINITY,
            husimi_mass_error: 0.0,
            norm_drift: 0.0,
            boundary_amplitude: 0.0,
            check_seconds: 0.0,
        }
    }
}

impl TransformDiagnostics {
    pub fn merge(&mut self, o: &Self) {
        self.states += o.states;
        self.wigner_states += o.wigner_states;
        self.wigner_x_marginal = self.wigner_x_marginal.max(o.wigner_x_marginal);
        self.wigner_p_marginal = self.wigner_p_marginal.max(o.wigner_p_marginal);
        self.wigner_imaginary = self.wigner_imaginary.max(o.wigner_imaginary);
        self.husimi_min = self.husimi_min.min(o.husimi_min);
        self.husimi_mass_error = self.husimi_mass_error.max(o.husimi_mass_error);
        self.norm_drift = self.norm_drift.max(o.norm_drift);
        self.boundary_amplitude = self.boundary_amplitude.max(o.boundary_amplitude);
        self.check_seconds += o.check_seconds;
    }

    fn observe(&mut self, psi: &WaveFunction, h: &PhaseSpaceDensity, with_wigner: bool) -> Result<()> {
        self.states += 1;
        self.husimi_min = self.husimi_min.min(h.min_value());
        self.husimi_mass_error = self.husimi_mass_error.max((h.integral() - 1.0).abs());
        self.norm_drift = self.norm_drift.max((psi.norm() - 1.0).abs());
        self.boundary_amplitude = self.boundary_amplitude.max(psi.boundary_amplitude());
        if with_wigner {
            let start = std::time::Instant::now();
            let (xe, pe, im) = wigner_identity_errors(psi)?;
            self.check_seconds += start.elapsed().as_secs_f64();
            self.wigner_states += 1;
            self.wigner_x_marginal = self.wigner_x_marginal.max(xe);
            self.wigner_p_marginal = self.wigner_p_marginal.max(pe);
            self.wigner_imaginary = self.wigner_imaginary.max(im);
        }
        Ok(())
    }
}

/// Box and step data of one `(ε, sample)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    pub eps: f64,
    pub sample: usize,
    pub half_width: f64,
    pub points: usize,
    pub dx: f64,
    pub dt: f64,
    pub clamp_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub eps: f64,
    pub sample: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub eps: f64,
    pub sample: usize,
    pub t: f64,
    pub distance: f64,
}

/// `D(ε)`; `None` when a cell of this `ε` failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsSummary {
    pub eps: f64,
    pub d: Option<f64>,
}

/// Husimi measures of one evolved WKB datum on the shared grid
/// (`[−T, T]` when backward runs are enabled).
struct CellRun {
    grid: CellGrid,
    husimi: Vec<ParticleMeasure>,
    initial: PhaseSpaceDensity,
    diagnostics: TransformDiagnostics,
}

fn direction_times(horizon: f64, samples: usize) -> Arc<[f64]> {
    uniform_times(horizon, samples - 1)
}

/// `[−t_{m}, …, −t_1, t_0, …, t_m]` or just the forward grid.
fn combined_times(horizon: f64, samples: usize, backward: bool) -> Arc<[f64]> {
    let fwd = direction_times(horizon, samples);
    if !backward {
        return fwd;
    }
    fwd[1..].iter().rev().map(|t| -t).chain(fwd.iter().copied()).collect()
}

/// Joins backward samples (at `t_k`, k ≥ 1, reversed) with forward ones.
fn combine<T: Clone>(forward: Vec<T>, backward: Option<Vec<T>>) -> Vec<T> {
    match backward {
        None => forward,
        Some(b) => b[1..].iter().rev().cloned().chain(forward).collect(),
    }
}

fn reflect(z: &[f64]) -> Vec<f64> {
    vec![z[0], -z[1]]
}

fn reflect_measure(mu: &ParticleMeasure) -> Result<ParticleMeasure> {
    mu.pushforward(|z, out| {
        out[0] = z[0];
        out[1] = -z[1];
        Ok(())
    })
}

/// Classical Dirac curve `t ↦ X(t, z0)` on the combined grid.
fn classical_states(b: &PhaseSpaceField, z0: [f64; 2], horizon: f64, s: &QuantumSettings) -> Result<Vec<Vec<f64>>> {
    let ctrl = StepControl::with_dt(s.classical_dt).samples(Some(s.time_samples));
    let run = |z: &[f64]| -> Result<Vec<Vec<f64>>> {
        let tr = integrate_trajectory(b, z, horizon, &ctrl)?;
        if !tr.is_complete() {
            return Err(Error::IncompleteTrajectory(format!(
                "classical trajectory from {z:?}: {}",
                tr.status().label()
            )));
        }
        Ok((0..tr.len()).map(|k| tr.state(k).to_vec()).collect())
    };
    let fwd = run(&z0)?;
    let bwd = if s.backward {
        Some(run(&reflect(&z0))?.iter().map(|z| reflect(z)).collect())
    } else {
        None
    };
    Ok(combine(fwd, bwd))
}

fn choose_grid(params: &WkbParams, extent: f64, horizon: f64, s: &QuantumSettings) -> Result<Grid1d> {
    let lmax = 0.5 * s.points as f64 * params.max_spacing();
    let half_width = match s.half_width {
        Some(l) => l,
        None => {
            let scale = params.scale();
            let width = match params.envelope {
                Envelope::Compact { half_width } => half_width,
                Envelope::Gaussian { sigma } => sigma,
            };
            let spread = scale * params.envelope.support_radius()
                + horizon * 4.0 * params.eps / (scale * width)
                + 4.0 * params.eps.sqrt();
            let l = extent + 1.5 * spread + 0.5;
            if l > lmax {
                log::warn!("ballistic box half-width {l:.2} exceeds the resolution limit; using {lmax:.2}");
                lmax
            } else {
                l
            }
        }
    };
    Grid1d::new(half_width, s.points)
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    potential_field: &PhaseSpaceField,
    params: &WkbParams,
    extent: f64,
    horizon: f64,
    s: &QuantumSettings,
    sample: usize,
) -> Result<CellRun> {
    let grid = choose_grid(params, extent, horizon, s)?;
    let psi0 = wkb_initial(params, &grid)?;
    let potential = potential_field.potential();
    let (fwd, stepper) = evolve_sampled(&psi0, potential, s.dt, horizon, s.time_samples)?;
    let bwd = if s.backward {
        let (states, _) = evolve_sampled(&psi0.conj(), potential, s.dt, horizon, s.time_samples)?;
        Some(states.iter().map(|w| w.conj()).collect::<Vec<_>>())
    } else {
        None
    };
    let states = combine(fwd, bwd);
    let mut diagnostics = TransformDiagnostics::default();
    let mut husimi_measures = Vec::with_capacity(states.len());
    let mut initial = None;
    let zero = if s.backward { s.time_samples - 1 } else { 0 };
    for (k, psi) in states.iter().enumerate() {
        let h = husimi(psi)?;
        diagnostics.observe(psi, &h, s.check_transforms)?;
        husimi_measures.push(husimi_to_measure(&h, s.husimi_threshold)?);
        if k == zero {
            initial = Some(h);
        }
    }
    Ok(CellRun {
        grid: CellGrid {
            eps: params.eps,
            sample,
            half_width: grid.half_width,
            points: grid.points,
            dx: grid.dx(),
            dt: stepper.dt(),
            clamp_radius: stepper.clamp_radius(),
        },
        husimi: husimi_measures,
        initial: initial.expect("time zero is sampled"),
        diagnostics,
    })
}

fn normalized_weights(w: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || w.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidParameter("sample weights must be nonnegative with positive sum".into()));
    }
    Ok(w.iter().map(|v| v / total).collect())
}

fn check_eps_list(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("ε list must be positive and strictly decreasing".into()));
    }
    Ok(())
}

fn summarize(eps_list: &[f64], weights: &[f64], sups: &[Vec<Option<f64>>]) -> Vec<EpsSummary> {
    eps_list
        .iter()
        .zip(sups)
        .map(|(&eps, row)| {
            let d = row.iter().zip(weights).try_fold(0.0, |acc, (v, w)| v.map(|v| acc + w * v));
            EpsSummary { eps, d }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// hypothesis statistics on the Husimi family

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HypothesisConfig {
    /// Box holding the centres of the nonnegative test bumps (default: the reference box).
    pub test_box: Option<BoxDomain>,
    pub test_per_axis: Vec<usize>,
    /// Bump radii (default: the lattice cell size).
    pub test_radius: Option<Vec<f64>>,
    /// Time bumps on `(a + f·len, b − f·len)` for each `f`.
    pub time_fractions: Vec<f64>,
    pub slack: f64,
    /// Largest tolerated max/min ratio of the regularity statistic across `ε`.
    pub regularity_ratio: f64,
    pub beta: f64,
    pub deltas: Vec<f64>,
    pub decay_radius: f64,
    pub decay_threshold: f64,
    /// Largest tolerated max/min ratio of the decay statistic across `δ`.
    pub decay_spread: f64,
    pub space_level: f64,
    pub radii: Vec<f64>,
    pub space_threshold: f64,
    pub ms: Vec<f64>,
    pub time_threshold: f64,
    /// The limit-continuity floor is this factor times the exact-transport baseline.
    pub floor_factor: f64,
    pub baseline_dt: f64,
    pub baseline_threshold: f64,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        Self {
            test_box: None,
            test_per_axis: vec![4, 4],
            test_radius: None,
            time_fractions: vec![0.1, 0.25],
            slack: 0.1,
            regularity_ratio: 2.0,
            beta: 1.5,
            deltas: vec![1e-1, 1e-2, 1e-3],
            decay_radius: 10.0,
            decay_threshold: 100.0,
            decay_spread: 2.0,
            space_level: 0.01,
            radii: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            space_threshold: 0.05,
            ms: vec![0.1, 1.0, 10.0, 100.0],
            time_threshold: 0.05,
            floor_factor: 2.0,
            baseline_dt: 1e-2,
            baseline_threshold: 1e-12,
        }
    }
}

impl HypothesisConfig {
    pub fn test_functions(&self, reference: &BoxDomain) -> Result<Vec<Arc<dyn TestFunction>>> {
        let dom = self.test_box.clone().unwrap_or_else(|| reference.clone());
        if self.test_per_axis.len() != dom.dim() {
            return Err(Error::DimensionMismatch { expected: dom.dim(), found: self.test_per_axis.len() });
        }
        let cell: Vec<f64> = (0..dom.dim()).map(|a| dom.width(a) / self.test_per_axis[a] as f64).collect();
        let radius = self.test_radius.clone().unwrap_or_else(|| cell.clone());
        let total: usize = self.test_per_axis.iter().product();
        let mut out: Vec<Arc<dyn TestFunction>> = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut c = vec![0.0; dom.dim()];
            for a in (0..dom.dim()).rev() {
                let i = rem % self.test_per_axis[a];
                rem /= self.test_per_axis[a];
                c[a] = dom.lo[a] + (i as f64 + 0.5) * cell[a];
            }
            out.push(Arc::new(Bump::new(c, radius.clone())?));
        }
        Ok(out)
    }

    pub fn time_bumps(&self, lo: f64, hi: f64) -> Result<Vec<TimeBump>> {
        let len = hi - lo;
        self.time_fractions.iter().map(|f| TimeBump::new(lo + f * len, hi - f * len)).collect()
    }
}

/// Statistics and their trend verdicts for a family sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisOutcome {
    pub report: StabilityReport,
    /// Limit-continuity values of the exact classical transport of the same initial data.
    pub baseline: Vec<f64>,
    pub regularity_spread: f64,
    pub regularity_pass: bool,
    pub decay_pass: bool,
    pub space_pass: bool,
    pub time_pass: bool,
    pub limit_pass: bool,
    /// Limit-continuity values strictly decreasing (no flooring).
    pub limit_strict: bool,
}

impl HypothesisOutcome {
    pub fn pass(&self) -> bool {
        self.regularity_pass && self.decay_pass && self.space_pass && self.time_pass && self.limit_pass
    }
}

/// Exact transport of each member's initial measure under the classical flow,
/// sampled on the family's time grid.
fn liouville_family(b: &PhaseSpaceField, fam: &CurveFamily, threshold: f64, dt: f64, backward: bool) -> Result<CurveFamily> {
    let times = fam.curves[0].shared_times();
    let zero = times.iter().position(|t| *t == 0.0).expect("grid contains 0");
    let horizon = times[times.len() - 1];
    let samples = times.len() - zero;
    let ctrl = StepControl { max_invalid: 1e-3, ..StepControl::with_dt(dt).samples(Some(samples)) };
    let mut curves = Vec::with_capacity(fam.len());
    for c in &fam.curves {
        let mu0 = c.slice(zero);
        let max = mu0.weights().iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..mu0.len()).filter(|&i| mu0.weights()[i] >= threshold * max).collect();
        let coords = keep.iter().flat_map(|&i| mu0.point(i).to_vec()).collect();
        let mu0 = ParticleMeasure::new(2, coords, keep.iter().map(|&i| mu0.weights()[i]).collect())?;
        let fwd = flow_map(b, &mu0, horizon, &ctrl)?.superpose(&mu0)?;
        let bwd = if backward {
            let r = reflect_measure(&mu0)?;
            let curve = flow_map(b, &r, horizon, &ctrl)?.superpose(&r)?;
            Some(curve.slices().iter().map(reflect_measure).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        let slices = combine(fwd.slices().to_vec(), bwd);
        curves.push(MeasureCurve::new(times.clone(), slices, "liouville")?);
    }
    CurveFamily::new(fam.weights.clone(), curves)
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// The decay statistic alone, for sweeps run only to probe the singular set.
pub fn decay_statistics(b: &PhaseSpaceField, families: &[CurveFamily], cfg: &HypothesisConfig) -> Result<DecayStat> {
    decay_stat(families, b.singular_set(), b.n(), cfg.beta, &cfg.deltas, cfg.decay_radius, cfg.decay_threshold)
}

/// Bounded by the threshold and stable within `decay_spread` across `δ`.
pub fn decay_passes(decay: &DecayStat, cfg: &HypothesisConfig) -> bool {
    decay.pass && decay.spread <= cfg.decay_spread
}

/// All hypothesis statistics for `families[n]` (one per ε) against `reference[n]`.
pub fn hypothesis_statistics(
    b: &PhaseSpaceField,
    eps_list: &[f64],
    families: &[CurveFamily],
    reference: &[CurveFamily],
    reference_box: &BoxDomain,
    cfg: &HypothesisConfig,
) -> Result<HypothesisOutcome> {
    let phis = cfg.test_functions(reference_box)?;
    let times = families[0].times();
    let psis = cfg.time_bumps(times[0], times[times.len() - 1])?;
    let backward = times[0] < 0.0;

    let one_atom = phis.iter().map(|p| p.sup_bound() / p.lebesgue_integral()).fold(0.0, f64::max);
    let regularity = families
        .iter()
        .map(|f| uniform_regularity_stat(f, &phis, one_atom, cfg.slack))
        .collect::<Result<Vec<_>>>()?;
    let (rmax, rmin) = regularity.iter().fold((0.0f64, f64::INFINITY), |(a, b), r| (a.max(r.value), b.min(r.value)));
    let regularity_spread = if rmin > 0.0 { rmax / rmin } else { f64::INFINITY };

    let decay = decay_statistics(b, families, cfg)?;
    let space = families
        .iter()
        .map(|f| space_tightness_stat(f, cfg.space_level, &cfg.radii, cfg.space_threshold))
        .collect::<Result<Vec<_>>>()?;
    let time = families
        .iter()
        .map(|f| time_tightness_stat(f, &phis, &cfg.ms, cfg.time_threshold))
        .collect::<Result<Vec<_>>>()?;

    let exact = families
        .iter()
        .map(|f| liouville_family(b, f, cfg.baseline_threshold, cfg.baseline_dt, backward))
        .collect::<Result<Vec<_>>>()?;
    let baseline = limit_continuity_stat(&exact, b, &phis, &psis, 0.0)?.values;
    let floor = cfg.floor_factor * baseline.iter().copied().fold(0.0, f64::max);
    let limit = limit_continuity_stat(families, b, &phis, &psis, floor)?;

    let dict = phase_space_dictionary(reference_box)?;
    let gaps = families
        .iter()
        .zip(reference)
        .map(|(f, r)| stability_gap(f, r, &dict))
        .collect::<Result<Vec<_>>>()?;

    let decay_pass = decay_passes(&decay, cfg);
    let outcome = HypothesisOutcome {
        regularity_pass: regularity_spread <= cfg.regularity_ratio && regularity.iter().all(|r| r.pass),
        regularity_spread,
        decay_pass,
        space_pass: space.iter().all(|s| s.pass),
        time_pass: time.iter().all(|t| t.pass),
        limit_pass: limit.pass,
        limit_strict: strictly_decreasing(&limit.values),
        baseline,
        report: StabilityReport {
            parameter: "eps".into(),
            labels: eps_list.to_vec(),
            regularity,
            decay: Some(decay),
            space_tightness: space,
            time_tightness: time,
            limit_continuity: limit,
            gaps,
        },
    };
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// ε-sweep with concentrating WKB data

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalConfig {
    pub field: FieldSpec,
    #[serde(default)]
    pub envelope: Envelope,
    #[serde(default = "half")]
    pub alpha: f64,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    pub samples: Vec<PhaseSample>,
    pub horizon: f64,
    /// Reference box of the phase-space dictionary metric.
    pub reference_box: BoxDomain,
    #[serde(default)]
    pub settings: QuantumSettings,
    #[serde(default)]
    pub hypotheses: Option<HypothesisConfig>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SemiclassicalResult {
    pub times: Vec<f64>,
    pub rows: Vec<DistanceRow>,
    pub summary: Vec<EpsSummary>,
    pub grids: Vec<CellGrid>,
    pub failures: Vec<CellFailure>,
    pub diagnostics: TransformDiagnostics,
    pub hypotheses: Option<HypothesisOutcome>,
    /// Husimi families per ε (combined time grid), in `eps_list` order.
    #[serde(skip)]
    pub families: Vec<CurveFamily>,
    /// Classical Dirac curves per sample.
    #[serde(skip)]
    pub reference: Vec<MeasureCurve>,
    #[serde(skip)]
    pub seconds: f64,
}

impl SemiclassicalResult {
    pub fn d_values(&self) -> Vec<Option<f64>> {
        self.summary.iter().map(|s| s.d).collect()
    }
}

/// For each ε and sample: WKB datum, split-step evolution on `[0,T]` (and
/// `[−T,0]`), Husimi measures on the shared grid and the sup-in-time dual
/// distance to the classical Dirac curve; `D(ε)` is the weighted average.
pub fn semiclassical_experiment(cfg: &SemiclassicalConfig) -> Result<SemiclassicalResult> {
    let start = Instant::now();
    check_eps_list(&cfg.eps_list)?;
    if cfg.samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if cfg.settings.time_samples < 3 {
        return Err(Error::InvalidParameter("need at least 3 time samples".into()));
    }
    let b = make_field(&cfg.field)?;
    if b.n() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: b.n() });
    }
    let weights = normalized_weights(&cfg.samples.iter().map(|s| s.weight).collect::<Vec<_>>())?;
    let dict = phase_space_dictionary(&cfg.reference_box)?;
    let s = &cfg.settings;
    let times = combined_times(cfg.horizon, s.time_samples, s.backward);

    let classical = cfg
        .samples
        .iter()
        .map(|p| classical_states(&b, [p.x0, p.p0], cfg.horizon, s))
        .collect::<Result<Vec<_>>>()?;
    let reference = classical
        .iter()
        .map(|states| {
            let slices = states.iter().map(|z| ParticleMeasure::dirac(z)).collect();
            MeasureCurve::new(times.clone(), slices, "classical")
        })
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> =
        (0..cfg.eps_list.len()).flat_map(|e| (0..cfg.samples.len()).map(move |j| (e, j))).collect();
    let runs: Vec<Result<(CellRun, Vec<f64>)>> = jobs
        .par_iter()
        .map(|&(e, j)| {
            let sample = cfg.samples[j];
            let params =
                WkbParams { x0: sample.x0, p0: sample.p0, alpha: cfg.alpha, envelope: cfg.envelope, eps: cfg.eps_list[e] };
            let extent = classical[j].iter().map(|z| z[0].abs()).fold(0.0, f64::max);
            let run = run_cell(&b, &params, extent, cfg.horizon, s, j)?;
            let d = run
                .husimi
                .iter()
                .zip(reference[j].slices())
                .map(|(h, r)| dual_distance(h, r, &dict))
                .collect::<Result<Vec<_>>>()?;
            Ok((run, d))
        })
        .collect();

    let mut rows = Vec::new();
    let mut grids = Vec::new();
    let mut failures = Vec::new();
    let mut diagnostics = TransformDiagnostics::default();
    let mut sups = vec![vec![None; cfg.samples.len()]; cfg.eps_list.len()];
    let mut curves: Vec<Vec<Option<MeasureCurve>>> = vec![vec![None; cfg.samples.len()]; cfg.eps_list.len()];
    for (&(e, j), run) in jobs.iter().zip(runs) {
        let eps = cfg.eps_list[e];
        match run {
            Ok((cell, d)) => {
                for (t, v) in times.iter().zip(&d) {
                    rows.push(DistanceRow { eps, sample: j, t: *t, distance: *v });
                }
                sups[e][j] = Some(d.iter().copied().fold(0.0, f64::max));
                grids.push(cell.grid);
                diagnostics.merge(&cell.diagnostics);
                curves[e][j] = Some(MeasureCurve::new(times.clone(), cell.husimi, format!("husimi eps={eps} sample={j}"))?);
            }
            Err(err) => failures.push(CellFailure { eps, sample: j, reason: err.to_string() }),
        }
    }
    let summary = summarize(&cfg.eps_list, &weights, &sups);
    let complete = curves.iter().all(|row| row.iter().all(Option::is_some));
    let families = if complete {
        curves
            .into_iter()
            .map(|row| CurveFamily::new(weights.clone(), row.into_iter().map(Option::unwrap).collect()))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let hypotheses = match (&cfg.hypotheses, complete) {
        (Some(h), true) => {
            let refs = vec![CurveFamily::new(weights.clone(), reference.clone())?; families.len()];
            Some(hypothesis_statistics(&b, &cfg.eps_list, &families, &refs, &cfg.reference_box, h)?)
        }
        _ => None,
    };
    Ok(SemiclassicalResult {
        times: times.to_vec(),
        rows,
        summary,
        grids,
        failures,
        diagnostics,
        hypotheses,
        families,
        reference,
        seconds: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// α = 1: the limit keeps the momentum profile of the envelope

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alpha1Config {
    pub field: FieldSpec,
    #[serde(default)]
    pub envelope: Envelope,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    pub x_samples: Vec<PositionSample>,
    pub p0: f64,
    pub horizon: f64,
    pub reference_box: BoxDomain,
    /// Number of momentum nodes discretizing `|φ̂0|²(· − p0)`.
    #[serde(default = "default_gamma_points")]
    pub gamma_points: usize,
    /// Half-range of the momentum discretization (default `12 / width`).
    #[serde(default)]
    pub gamma_range: Option<f64>,
    #[serde(default)]
    pub settings: QuantumSettings,
}

fn default_gamma_points() -> usize {
    241
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumProfileRow {
    pub eps: f64,
    pub sample: usize,
    /// Distance between the Husimi p-marginal at `t = 0` and `|φ̂0|²(· − p0)`.
    pub distance: f64,
    /// Variance of the Husimi x-marginal at `t = 0`.
    pub x_variance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Alpha1Result {
    pub times: Vec<f64>,
    pub rows: Vec<DistanceRow>,
    pub summary: Vec<EpsSummary>,
    pub momentum: Vec<MomentumProfileRow>,
    pub grids: Vec<CellGrid>,
    pub failures: Vec<CellFailure>,
    pub diagnostics: TransformDiagnostics,
    #[serde(skip)]
    pub seconds: f64,
}

impl Alpha1Config {
    fn gamma_range(&self) -> f64 {
        self.gamma_range.unwrap_or_else(|| {
            let w = match self.envelope {
                Envelope::Compact { half_width } => half_width,
                Envelope::Gaussian { sigma } => sigma,
            };
            12.0 / w
        })
    }

    /// `|φ̂0|²(· − p0)` on `gamma_points` equispaced momenta, normalized.
    pub fn gamma(&self) -> Result<ParticleMeasure> {
        let r = self.gamma_range();
        let n = self.gamma_points.max(2);
        let h = 2.0 * r / (n - 1) as f64;
        let xi: Vec<f64> = (0..n).map(|k| -r + k as f64 * h).collect();
        let w: Vec<f64> = xi.iter().map(|x| self.envelope.fourier_density(*x)).collect();
        let total: f64 = w.iter().sum();
        ParticleMeasure::new(1, xi.iter().map(|x| self.p0 + x).collect(), w.iter().map(|v| v / total).collect())
    }

    pub fn momentum_dictionary(&self) -> Result<TestFunctionDictionary> {
        let r = self.gamma_range();
        TestFunctionDictionary::default_for(&BoxDomain::new(vec![self.p0 - r], vec![self.p0 + r])?)
    }
}

/// α = 1 sweep: the reference is the classical transport of
/// `δ_{x0} × |φ̂0|²(· − p0)` rather than a Dirac curve.
pub fn alpha1_experiment(cfg: &Alpha1Config) -> Result<Alpha1Result> {
    let start = Instant::now();
    check_eps_list(&cfg.eps_list)?;
    if cfg.x_samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let b = make_field(&cfg.field)?;
    if b.n() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: b.n() });
    }
    let s = &cfg.settings;
    let weights = normalized_weights(&cfg.x_samples.iter().map(|x| x.weight).collect::<Vec<_>>())?;
    let dict = phase_space_dictionary(&cfg.reference_box)?;
    let pdict = cfg.momentum_dictionary()?;
    let gamma = cfg.gamma()?;
    let times = combined_times(cfg.horizon, s.time_samples, s.backward);

    let xs = ParticleMeasure::new(1, cfg.x_samples.iter().map(|x| x.x0).collect(), weights.clone())?;
    let ensemble = product_ensemble_at(&xs, &gamma, None)?;
    let ctrl = StepControl::with_dt(s.classical_dt).samples(Some(s.time_samples));
    let reference = ensemble
        .members()
        .iter()
        .map(|m| {
            let fwd = flow_map(&b, &m.measure, cfg.horizon, &ctrl)?.superpose(&m.measure)?;
            let bwd = if s.backward {
                let r = reflect_measure(&m.measure)?;
                let c = flow_map(&b, &r, cfg.horizon, &ctrl)?.superpose(&r)?;
                Some(c.slices().iter().map(reflect_measure).collect::<Result<Vec<_>>>()?)
            } else {
                None
            };
            MeasureCurve::new(times.clone(), combine(fwd.slices().to_vec(), bwd), "product transport")
        })
        .collect::<Result<Vec<_>>>()?;
    let extents: Vec<f64> = reference
        .iter()
        .map(|c| {
            // extent of the transported momentum core
            c.slices()
                .iter()
                .flat_map(|mu| mu.points().zip(mu.weights()).filter(|(_, w)| **w > 1e-8).map(|(z, _)| z[0].abs()))
                .fold(0.0, f64::max)
        })
        .collect();

    let jobs: Vec<(usize, usize)> =
        (0..cfg.eps_list.len()).flat_map(|e| (0..cfg.x_samples.len()).map(move |j| (e, j))).collect();
    let runs: Vec<Result<(CellRun, Vec<f64>, MomentumProfileRow)>> = jobs
        .par_iter()
        .map(|&(e, j)| {
            let eps = cfg.eps_list[e];
            let params = WkbParams { x0: cfg.x_samples[j].x0, p0: cfg.p0, alpha: 1.0, envelope: cfg.envelope, eps };
            let run = run_cell(&b, &params, extents[j], cfg.horizon, s, j)?;
            let d = run
                .husimi
                .iter()
                .zip(reference[j].slices())
                .map(|(h, r)| dual_distance(h, r, &dict))
                .collect::<Result<Vec<_>>>()?;
            let h0 = &run.initial;
            let marg = h0.p_marginal();
            let pm = ParticleMeasure::new(1, h0.p.clone(), marg.iter().map(|m| m * h0.dp).collect())?.normalized()?;
            let xm = h0.x_marginal();
            let mass: f64 = xm.iter().sum();
            let mean = xm.iter().zip(&h0.x).map(|(m, x)| m * x).sum::<f64>() / mass;
            let var = xm.iter().zip(&h0.x).map(|(m, x)| m * (x - mean).powi(2)).sum::<f64>() / mass;
            let row = MomentumProfileRow { eps, sample: j, distance: weak_distance(&pm, &gamma, &pdict)?, x_variance: var };
            Ok((run, d, row))
        })
        .collect();

    let mut rows = Vec::new();
    let mut grids = Vec::new();
    let mut failures = Vec::new();
    let mut momentum = Vec::new();
    let mut diagnostics = TransformDiagnostics::default();
    let mut sups = vec![vec![None; cfg.x_samples.len()]; cfg.eps_list.len()];
    for (&(e, j), run) in jobs.iter().zip(runs) {
        let eps = cfg.eps_list[e];
        match run {
            Ok((cell, d, m)) => {
                for (t, v) in times.iter().zip(&d) {
                    rows.push(DistanceRow { eps, sample: j, t: *t, distance: *v });
                }
                sups[e][j] = Some(d.iter().copied().fold(0.0, f64::max));
                grids.push(cell.grid);
                diagnostics.merge(&cell.diagnostics);
                momentum.push(m);
            }
            Err(err) => failures.push(CellFailure { eps, sample: j, reason: err.to_string() }),
        }
    }
    Ok(Alpha1Result {
        times: times.to_vec(),
        rows,
        summary: summarize(&cfg.eps_list, &weights, &sups),
        momentum,
        grids,
        failures,
        diagnostics,
        seconds: start.elapsed().as_secs_f64(),
    })
}
