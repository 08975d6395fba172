//! Experiment configuration, the named pipelines, and result persistence.

mod config;
mod oracle;
mod plots;
mod record;
mod run;

pub use config::{
    ExperimentConfig, OracleSection, ParticleFvSection, ResidualOrderSection, RlfCheckSection, StabilitySection,
    Tolerances, UniquenessSection, DEFAULT_OUTPUT_ROOT, EXPERIMENTS, OUTPUT_ROOT_ENV,
};
pub use oracle::{particle_fv_gap, residual_order, uniqueness_distances};
pub use plots::{emit_plotdata, PlotManifest};
pub use record::{Check, OracleOutcome, ParticleFvLevel, RlfCheckOutcome, RunRecord, Stage, SweepOutcome};
pub use run::{load_record, run_experiment, run_experiment_in, CONFIG_SNAPSHOT, MANIFEST};
