use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fields::{make_field, FieldSpec};
use crate::flow::StepControl;
use crate::measures::BoxDomain;
use crate::quantum::{Alpha1Config, HypothesisConfig, SemiclassicalConfig};
use crate::{Error, Result};

/// Overrides the directory that relative output paths are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "RLF_LAB_OUTPUT_ROOT";

pub const DEFAULT_OUTPUT_ROOT: &str = "runs";

/// Names accepted in the `experiment` key.
pub const EXPERIMENTS: [(&str, &str); 5] = [
    ("rlf-check", "flow a uniform cloud and check the integral-solution residual and the density bound"),
    ("stability-hypotheses", "hypothesis statistics on the Husimi family, plus a Coulomb variant for the decay sweep"),
    ("semiclassical", "ε-sweep of Husimi transforms of WKB data against the classical flow"),
    ("alpha1", "ε-sweep at α = 1 against the transported momentum profile"),
    ("oracle-consistency", "particle vs finite-volume densities, weak-residual order and flow uniqueness"),
];

/// Acceptance thresholds applied to the run's checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub fv_l1: f64,
    pub fv_refinement: f64,
    pub residual_ratio: f64,
    pub uniqueness: f64,
    pub wigner_x_marginal: f64,
    pub wigner_p_marginal: f64,
    pub husimi_negativity: f64,
    pub husimi_mass: f64,
    /// `D(ε_last) < d_ratio · D(ε_first)`.
    pub d_ratio: f64,
    pub momentum_profile: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fv_l1: 0.1,
            fv_refinement: 1.5,
            residual_ratio: 3.0,
            uniqueness: 1e-4,
            wigner_x_marginal: 1e-8,
            wigner_p_marginal: 1e-6,
            husimi_negativity: 1e-12,
            husimi_mass: 1e-6,
            d_ratio: 0.5,
            momentum_profile: 0.05,
        }
    }
}

/// Uniform cloud flowed by `field`, checked at five slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RlfCheckSection {
    pub field: FieldSpec,
    pub cloud: BoxDomain,
    /// Jittered lattice strata per axis.
    pub per_axis: Vec<usize>,
    pub horizon: f64,
    pub control: StepControl,
    /// Density bound `C`; defaults to the initial density `1/|cloud|`.
    pub bound: Option<f64>,
    pub kde_box: BoxDomain,
    pub kde_cells: Vec<usize>,
    pub bandwidth: Option<f64>,
    pub slack: f64,
    pub subsample: usize,
    pub residual_tol: f64,
    pub write_bundle: bool,
}

impl Default for RlfCheckSection {
    fn default() -> Self {
        Self {
            field: FieldSpec::new("harmonic"),
            cloud: BoxDomain::symmetric(2, 1.0).expect("valid box"),
            per_axis: vec![400, 250],
            horizon: 2.0 * std::f64::consts::PI,
            control: StepControl { samples: Some(9), ..StepControl::with_dt(5e-3) },
            bound: None,
            kde_box: BoxDomain::symmetric(2, 1.5).expect("valid box"),
            kde_cells: vec![32, 32],
            bandwidth: None,
            slack: 0.1,
            subsample: 64,
            residual_tol: 1e-6,
            write_bundle: false,
        }
    }
}

/// Gaussian density transported by particles and by the upwind scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParticleFvSection {
    pub field: FieldSpec,
    pub center: Vec<f64>,
    pub sigma: f64,
    pub domain: BoxDomain,
    /// Coarse cells per axis; the refined level doubles them.
    pub cells: usize,
    /// Quadrature particles per cell and axis.
    pub particles_per_cell: usize,
    pub horizon: f64,
    pub dt: f64,
}

impl Default for ParticleFvSection {
    fn default() -> Self {
        Self {
            field: FieldSpec::new("harmonic"),
            center: vec![0.5, 0.0],
            sigma: 0.5,
            domain: BoxDomain::symmetric(2, 3.5).expect("valid box"),
            cells: 128,
            particles_per_cell: 2,
            horizon: 1.0,
            dt: 1e-2,
        }
    }
}

/// Weak residual of a superposition curve on successively doubled time grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResidualOrderSection {
    pub field: FieldSpec,
    pub center: Vec<f64>,
    pub sigma: f64,
    pub per_axis: usize,
    pub horizon: f64,
    pub dt: f64,
    /// Stored samples on `[0, T]`, each one a doubling of the previous grid.
    pub samples: Vec<usize>,
    pub test_center: Vec<f64>,
    pub test_radius: Vec<f64>,
    pub time_fraction: f64,
}

impl Default for ResidualOrderSection {
    fn default() -> Self {
        Self {
            field: FieldSpec::new("harmonic"),
            center: vec![0.5, 0.0],
            sigma: 0.3,
            per_axis: 16,
            horizon: 1.0,
            dt: 1e-3,
            samples: vec![9, 17, 33],
            test_center: vec![0.5, -0.3],
            test_radius: vec![0.8, 0.8],
            time_fraction: 0.1,
        }
    }
}

/// The same measure flowed twice with unrelated numerical settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UniquenessSection {
    pub field: FieldSpec,
    pub center: Vec<f64>,
    pub sigma: f64,
    pub per_axis: usize,
    pub horizon: f64,
    pub first: StepControl,
    pub second: StepControl,
    pub reference_box: BoxDomain,
}

impl Default for UniquenessSection {
    fn default() -> Self {
        Self {
            field: FieldSpec::new("harmonic"),
            center: vec![0.5, 0.0],
            sigma: 0.3,
            per_axis: 24,
            horizon: 1.0,
            first: StepControl { samples: Some(11), ..StepControl::with_dt(1e-3) },
            second: StepControl { samples: Some(21), ..StepControl::with_dt(3e-4) },
            reference_box: BoxDomain::symmetric(2, 2.5).expect("valid box"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleSection {
    pub particle_fv: ParticleFvSection,
    pub residual: ResidualOrderSection,
    pub uniqueness: UniquenessSection,
}

/// The ε-sweep whose Husimi family is tested, and optionally a second sweep
/// (Coulomb, clamped) whose decay statistic replaces that of the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySection {
    pub primary: SemiclassicalConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_variant: Option<SemiclassicalConfig>,
}

/// One run: an experiment name, a mandatory seed and the sections it reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    /// Relative paths are resolved against the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rlf_check: Option<RlfCheckSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semiclassical: Option<SemiclassicalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<Alpha1Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySection>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the experiment name and every referenced spec, and fills in
    /// defaulted sections so the stored snapshot is complete.
    pub fn resolve(mut self) -> Result<Self> {
        if !EXPERIMENTS.iter().any(|(n, _)| *n == self.experiment) {
            return Err(Error::UnknownExperiment(self.experiment));
        }
        let missing = |s: &str| Error::Config(format!("experiment `{}` needs a [{s}] section", self.experiment));
        match self.experiment.as_str() {
            "rlf-check" => {
                let s = self.rlf_check.get_or_insert_with(Default::default);
                make_field(&s.field)?;
                s.control.validate()?;
            }
            "oracle-consistency" => {
                let s = self.oracle.get_or_insert_with(Default::default);
                make_field(&s.particle_fv.field)?;
                make_field(&s.residual.field)?;
                make_field(&s.uniqueness.field)?;
                s.uniqueness.first.validate()?;
                s.uniqueness.second.validate()?;
            }
            "semiclassical" => {
                let s = self.semiclassical.as_ref().ok_or_else(|| missing("semiclassical"))?;
                make_field(&s.field)?;
            }
            "alpha1" => {
                let s = self.alpha1.as_ref().ok_or_else(|| missing("alpha1"))?;
                make_field(&s.field)?;
            }
            "stability-hypotheses" => {
                let s = self.stability.as_mut().ok_or_else(|| missing("stability"))?;
                make_field(&s.primary.field)?;
                s.primary.hypotheses.get_or_insert_with(HypothesisConfig::default);
                if let Some(v) = s.decay_variant.as_mut() {
                    make_field(&v.field)?;
                    v.hypotheses.get_or_insert_with(HypothesisConfig::default);
                }
            }
            _ => unreachable!("checked above"),
        }
        Ok(self)
    }

    /// `root/output_dir` (default `root/<experiment>`), where `root` comes
    /// from the environment override or `runs`.
    pub fn output_path(&self) -> PathBuf {
        let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| DEFAULT_OUTPUT_ROOT.into());
        self.output_path_under(&root)
    }

    pub fn output_path_under(&self, root: &Path) -> PathBuf {
        match &self.output_dir {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => root.join(p),
            None => root.join(&self.experiment),
        }
    }
}
