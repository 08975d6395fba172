use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::measures::{
    check_density_bound, default_bandwidth, density_estimate, sampling, BoxDomain, DensityBoundReport, DEFAULT_SLACK,
};
use crate::Result;

use super::residual::ode_residual;
use super::trajectory::{integrate_on, uniform_times};
use super::{FlowMap, StepControl};

/// Settings for [`check_rlf`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlfCheckConfig {
    /// The compression constant `C`.
    pub bound: f64,
    pub domain: BoxDomain,
    pub cells: Vec<usize>,
    /// KDE bandwidth; defaults to twice the mean nearest-neighbour spacing of the base cloud.
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_subsample")]
    pub subsample: usize,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_slack() -> f64 {
    DEFAULT_SLACK
}

fn default_subsample() -> usize {
    64
}

fn default_residual_tol() -> f64 {
    1e-6
}

impl RlfCheckConfig {
    pub fn new(bound: f64, domain: BoxDomain, cells: Vec<usize>) -> Self {
        Self {
            bound,
            domain,
            cells,
            bandwidth: None,
            slack: DEFAULT_SLACK,
            subsample: default_subsample(),
            residual_tol: default_residual_tol(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceDensity {
    pub time: f64,
    pub spill: f64,
    pub report: DensityBoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlfReport {
    pub max_residual: f64,
    pub residual_tol: f64,
    pub residual_samples: usize,
    pub bandwidth: f64,
    pub invalid_fraction: f64,
    pub slices: Vec<SliceDensity>,
    pub pass: bool,
}

impl RlfReport {
    pub fn max_density(&self) -> f64 {
        self.slices.iter().map(|s| s.report.max_density).fold(0.0, f64::max)
    }
}

/// Five evenly spaced indices into a grid of `n` samples (fewer if `n < 5`).
pub fn five_slices(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..5).map(|j| ((j * (n - 1)) as f64 / 4.0).round() as usize).collect();
    v.dedup();
    v
}

/// Checks both RLF conditions numerically: the integral-solution residual on
/// a seeded subsample (re-integrated on a fine uniform grid), and the density
/// bound of `X(t,·)_# ν` at five evenly spaced times.
pub fn check_rlf(f: &FlowMap, cfg: &RlfCheckConfig) -> Result<RlfReport> {
    let b = f.field();
    let ctrl = StepControl { samples: None, ..f.control().clone() };
    let fine = uniform_times(f.horizon(), ctrl.macro_steps(f.horizon()));
    let complete: Vec<usize> = (0..f.len()).filter(|&i| f.statuses()[i].is_complete()).collect();
    let picks: Vec<usize> = if complete.len() <= cfg.subsample {
        complete.clone()
    } else {
        let mut rng = sampling::rng(cfg.seed);
        let mut s: Vec<usize> = sample(&mut rng, complete.len(), cfg.subsample).into_iter().map(|j| complete[j]).collect();
        s.sort_unstable();
        s
    };
    let mut max_residual = 0.0f64;
    for &i in &picks {
        let tr = integrate_on(b, f.base().point(i), f.horizon(), &ctrl, fine.clone())?;
        if tr.is_complete() {
            max_residual = max_residual.max(ode_residual(&tr, b)?);
        }
    }
    let bandwidth = match cfg.bandwidth {
        Some(h) => h,
        None => default_bandwidth(f.base())?,
    };
    let mut slices = Vec::new();
    for k in five_slices(f.times().len()) {
        let mu = f.pushforward_slice(k)?;
        let est = density_estimate(&mu, &cfg.domain, &cfg.cells, bandwidth)?;
        let report = check_density_bound(&est.density, cfg.bound, cfg.slack)?;
        slices.push(SliceDensity { time: f.times()[k], spill: est.spill, report });
    }
    let pass = max_residual <= cfg.residual_tol && slices.iter().all(|s| s.report.pass);
    Ok(RlfReport {
        max_residual,
        residual_tol: cfg.residual_tol,
        residual_samples: picks.len(),
        bandwidth,
        invalid_fraction: f.invalid_fraction(),
        slices,
        pass,
    })
}
