use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::flow::RlfReport;
use crate::quantum::{CellFailure, CellGrid, EpsSummary, HypothesisOutcome, MomentumProfileRow, TransformDiagnostics};
use crate::weakform::DecayStat;

/// Outcome of one pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Stage<T> {
    Done { report: T },
    Skipped { reason: String },
    Failed { reason: String },
}

impl<T> Stage<T> {
    pub fn skipped(reason: impl Into<String>) -> Self {
        Stage::Skipped { reason: reason.into() }
    }

    pub fn report(&self) -> Option<&T> {
        match self {
            Stage::Done { report } => Some(report),
            _ => None,
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, Stage::Failed { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Stage::Done { .. } => "done",
            Stage::Skipped { .. } => "skipped",
            Stage::Failed { .. } => "failed",
        }
    }
}

impl<T> From<crate::Result<T>> for Stage<T> {
    fn from(r: crate::Result<T>) -> Self {
        match r {
            Ok(report) => Stage::Done { report },
            Err(e) => Stage::Failed { reason: e.to_string() },
        }
    }
}

/// A named acceptance check: `value` compared against `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value >= threshold }
    }

    /// A yes/no property, recorded as `1`/`0` against threshold `1`.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, pass: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlfCheckOutcome {
    pub points: usize,
    pub bound: f64,
    pub report: RlfReport,
}

/// `D(ε)` sweep summary; the per-time distances live in `distances.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub summary: Vec<EpsSummary>,
    pub grids: Vec<CellGrid>,
    pub failures: Vec<CellFailure>,
    pub diagnostics: TransformDiagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<HypothesisOutcome>,
    /// Decay statistic of a sweep run only for it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayStat>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub momentum: Vec<MomentumProfileRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleFvLevel {
    pub cells: usize,
    pub particles: usize,
    pub fv_steps: usize,
    pub l1_gap: f64,
    pub fv_mass_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub particle_fv: Vec<ParticleFvLevel>,
    /// `(samples, residual)` per time grid.
    pub residuals: Vec<(usize, f64)>,
    /// `(t, distance)` on the common times of the two constructions.
    pub uniqueness: Vec<(f64, f64)>,
}

/// Everything a run produced, with the fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub version: String,
    pub output_dir: PathBuf,
    pub wall_seconds: f64,
    pub rlf_check: Stage<RlfCheckOutcome>,
    pub oracle: Stage<OracleOutcome>,
    pub semiclassical: Stage<SweepOutcome>,
    pub alpha1: Stage<SweepOutcome>,
    pub stability: Stage<SweepOutcome>,
    pub decay_variant: Stage<SweepOutcome>,
    pub checks: Vec<Check>,
}

impl RunRecord {
    /// A record with every stage skipped.
    pub fn empty(config: ExperimentConfig, output_dir: PathBuf) -> Self {
        let skip = || "not part of this experiment".to_string();
        Self {
            config,
            version: env!("CARGO_PKG_VERSION").into(),
            output_dir,
            wall_seconds: 0.0,
            rlf_check: Stage::Skipped { reason: skip() },
            oracle: Stage::Skipped { reason: skip() },
            semiclassical: Stage::Skipped { reason: skip() },
            alpha1: Stage::Skipped { reason: skip() },
            stability: Stage::Skipped { reason: skip() },
            decay_variant: Stage::Skipped { reason: skip() },
            checks: Vec::new(),
        }
    }

    pub fn failed_stages(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (name, failed) in [
            ("rlf_check", self.rlf_check.is_failed()),
            ("oracle", self.oracle.is_failed()),
            ("semiclassical", self.semiclassical.is_failed()),
            ("alpha1", self.alpha1.is_failed()),
            ("stability", self.stability.is_failed()),
            ("decay_variant", self.decay_variant.is_failed()),
        ] {
            if failed {
                out.push(name);
            }
        }
        out
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Process exit code: 1 if a stage errored, 2 if a check failed, else 0.
    pub fn exit_code(&self) -> i32 {
        if !self.failed_stages().is_empty() {
            1
        } else if !self.all_checks_pass() {
            2
        } else {
            0
        }
    }
}
