use std::fs;
use std::path::Path;
use std::time::Instant;

use super::oracle::{particle_fv_gap, residual_order, uniqueness_distances};
use super::{
    Check, ExperimentConfig, OracleOutcome, OracleSection, RlfCheckOutcome, RlfCheckSection, RunRecord, Stage,
    StabilitySection, SweepOutcome, Tolerances,
};
use crate::fields::make_field;
use crate::flow::{check_rlf, flow_map, write_bundle, RlfCheckConfig, RlfReport};
use crate::measures::sampling;
use crate::quantum::{
    alpha1_experiment, decay_passes, decay_statistics, semiclassical_experiment, DistanceRow, EpsSummary,
    HypothesisConfig, SemiclassicalConfig, TransformDiagnostics,
};
use crate::weakform::fmt;
use crate::Result;

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_SNAPSHOT: &str = "config.toml";

/// Resolves `config`, runs its pipeline into [`ExperimentConfig::output_path`]
/// and writes the manifest. Invalid configs fail before anything is written.
pub fn run_experiment(config: ExperimentConfig) -> Result<RunRecord> {
    let config = config.resolve()?;
    let dir = config.output_path();
    run_resolved(config, &dir)
}

/// As [`run_experiment`] but writing into `dir`.
pub fn run_experiment_in(config: ExperimentConfig, dir: &Path) -> Result<RunRecord> {
    run_resolved(config.resolve()?, dir)
}

fn run_resolved(config: ExperimentConfig, dir: &Path) -> Result<RunRecord> {
    let start = Instant::now();
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_SNAPSHOT), config.to_toml()?)?;
    let mut record = RunRecord::empty(config.clone(), dir.to_path_buf());
    let tol = &config.tolerances;
    let mut checks = Vec::new();
    match config.experiment.as_str() {
        "rlf-check" => {
            let s = config.rlf_check.as_ref().expect("resolved");
            record.rlf_check = rlf_stage(s, config.seed, dir, &mut checks).into();
        }
        "oracle-consistency" => {
            let s = config.oracle.as_ref().expect("resolved");
            record.oracle = oracle_stage(s, tol, dir, &mut checks).into();
        }
        "semiclassical" => {
            let s = config.semiclassical.as_ref().expect("validated");
            record.semiclassical = semiclassical_stage(s, tol, dir, &mut checks).into();
        }
        "alpha1" => {
            let s = config.alpha1.as_ref().expect("validated");
            record.alpha1 = alpha1_stage(s, tol, dir, &mut checks).into();
        }
        "stability-hypotheses" => {
            let s = config.stability.as_ref().expect("validated");
            stability_stages(s, dir, &mut record, &mut checks);
        }
        _ => unreachable!("resolve rejects unknown experiments"),
    }
    record.checks = checks;
    record.wall_seconds = start.elapsed().as_secs_f64();
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&record)?)?;
    Ok(record)
}

/// Reads a record back from a run directory.
pub fn load_record(dir: &Path) -> Result<RunRecord> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?)
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_distances(dir: &Path, rows: &[DistanceRow]) -> Result<()> {
    write_csv(
        &dir.join("distances.csv"),
        &["eps", "sample", "t", "distance"],
        rows.iter().map(|r| vec![fmt(r.eps), r.sample.to_string(), fmt(r.t), fmt(r.distance)]),
    )
}

fn write_summary(dir: &Path, summary: &[EpsSummary]) -> Result<()> {
    write_csv(
        &dir.join("d_eps.csv"),
        &["eps", "D"],
        summary.iter().map(|s| vec![fmt(s.eps), s.d.map(fmt).unwrap_or_default()]),
    )
}

fn rlf_stage(s: &RlfCheckSection, seed: u64, dir: &Path, checks: &mut Vec<Check>) -> Result<RlfCheckOutcome> {
    let b = make_field(&s.field)?;
    let cloud = sampling::uniform_stratified(&s.cloud, &s.per_axis, seed)?;
    let map = flow_map(&b, &cloud, s.horizon, &s.control)?;
    if s.write_bundle {
        write_bundle(&map, &dir.join("bundle"))?;
    }
    let bound = s.bound.unwrap_or_else(|| 1.0 / s.cloud.volume());
    let cfg = RlfCheckConfig {
        bandwidth: s.bandwidth,
        slack: s.slack,
        subsample: s.subsample,
        residual_tol: s.residual_tol,
        seed,
        ..RlfCheckConfig::new(bound, s.kde_box.clone(), s.kde_cells.clone())
    };
    let report = check_rlf(&map, &cfg)?;
    write_density_profile(dir, &report)?;
    checks.push(Check::at_most("rlf_residual", report.max_residual, report.residual_tol));
    let threshold = bound * (1.0 + s.slack);
    checks.push(Check::at_most("rlf_density", report.max_density(), threshold));
    Ok(RlfCheckOutcome { points: cloud.len(), bound, report })
}

pub(crate) fn write_density_profile(dir: &Path, report: &RlfReport) -> Result<()> {
    write_csv(
        &dir.join("density_profile.csv"),
        &["t", "max_density", "bound", "threshold", "spill"],
        report.slices.iter().map(|s| {
            vec![fmt(s.time), fmt(s.report.max_density), fmt(s.report.bound), fmt(s.report.threshold), fmt(s.spill)]
        }),
    )
}

fn oracle_stage(s: &OracleSection, tol: &Tolerances, dir: &Path, checks: &mut Vec<Check>) -> Result<OracleOutcome> {
    let coarse = particle_fv_gap(&s.particle_fv, s.particle_fv.cells)?;
    let fine = particle_fv_gap(&s.particle_fv, 2 * s.particle_fv.cells)?;
    let particle_fv = vec![coarse, fine];
    checks.push(Check::at_most("fv_l1", particle_fv[0].l1_gap, tol.fv_l1));
    checks.push(Check::at_least("fv_refinement", particle_fv[0].l1_gap / particle_fv[1].l1_gap, tol.fv_refinement));

    let residuals = residual_order(&s.residual)?;
    let worst_ratio = residuals.windows(2).map(|w| w[0].1 / w[1].1).fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least("residual_ratio", worst_ratio, tol.residual_ratio));

    let uniqueness = uniqueness_distances(&s.uniqueness)?;
    let sup = uniqueness.iter().map(|p| p.1).fold(0.0, f64::max);
    checks.push(Check::at_most("uniqueness", sup, tol.uniqueness));
    let out = OracleOutcome { particle_fv, residuals, uniqueness };
    write_oracle_tables(&out, dir)?;
    Ok(out)
}

pub(crate) fn write_oracle_tables(o: &OracleOutcome, dir: &Path) -> Result<()> {
    write_csv(
        &dir.join("fv_vs_particles.csv"),
        &["cells", "particles", "fv_steps", "l1_gap", "fv_mass_defect"],
        o.particle_fv.iter().map(|l| {
            vec![l.cells.to_string(), l.particles.to_string(), l.fv_steps.to_string(), fmt(l.l1_gap), fmt(l.fv_mass_defect)]
        }),
    )?;
    write_csv(
        &dir.join("weak_residual.csv"),
        &["samples", "residual"],
        o.residuals.iter().map(|(n, r)| vec![n.to_string(), fmt(*r)]),
    )?;
    write_csv(&dir.join("uniqueness.csv"), &["t", "distance"], o.uniqueness.iter().map(|(t, d)| vec![fmt(*t), fmt(*d)]))
}

fn strictly_decreasing(summary: &[EpsSummary]) -> bool {
    let d: Vec<Option<f64>> = summary.iter().map(|s| s.d).collect();
    d.iter().all(Option::is_some) && d.windows(2).all(|w| w[1] < w[0])
}

fn trend_checks(summary: &[EpsSummary], checks: &mut Vec<Check>) {
    checks.push(Check::holds("d_decreasing", strictly_decreasing(summary)));
}

fn transform_checks(diag: &TransformDiagnostics, tol: &Tolerances, checks: &mut Vec<Check>) {
    if diag.wigner_states > 0 {
        checks.push(Check::at_most("wigner_x_marginal", diag.wigner_x_marginal, tol.wigner_x_marginal));
        checks.push(Check::at_most("wigner_p_marginal", diag.wigner_p_marginal, tol.wigner_p_marginal));
    }
    checks.push(Check::at_least("husimi_min", diag.husimi_min, -tol.husimi_negativity));
    checks.push(Check::at_most("husimi_mass", diag.husimi_mass_error, tol.husimi_mass));
}

fn semiclassical_stage(
    s: &SemiclassicalConfig,
    tol: &Tolerances,
    dir: &Path,
    checks: &mut Vec<Check>,
) -> Result<SweepOutcome> {
    let r = semiclassical_experiment(s)?;
    write_distances(dir, &r.rows)?;
    write_summary(dir, &r.summary)?;
    checks.push(Check::holds("cells_complete", r.failures.is_empty()));
    trend_checks(&r.summary, checks);
    if let (Some(first), Some(last)) = (r.summary.first().and_then(|s| s.d), r.summary.last().and_then(|s| s.d)) {
        checks.push(Check::at_most("d_ratio", last / first, tol.d_ratio));
    }
    transform_checks(&r.diagnostics, tol, checks);
    Ok(SweepOutcome {
        summary: r.summary,
        grids: r.grids,
        failures: r.failures,
        diagnostics: r.diagnostics,
        hypotheses: None,
        decay: None,
        momentum: Vec::new(),
    })
}

fn alpha1_stage(
    s: &crate::quantum::Alpha1Config,
    tol: &Tolerances,
    dir: &Path,
    checks: &mut Vec<Check>,
) -> Result<SweepOutcome> {
    let r = alpha1_experiment(s)?;
    write_distances(dir, &r.rows)?;
    write_summary(dir, &r.summary)?;
    write_csv(
        &dir.join("momentum_profile.csv"),
        &["eps", "sample", "distance", "x_variance"],
        r.momentum.iter().map(|m| vec![fmt(m.eps), m.sample.to_string(), fmt(m.distance), fmt(m.x_variance)]),
    )?;
    checks.push(Check::holds("cells_complete", r.failures.is_empty()));
    trend_checks(&r.summary, checks);
    let smallest = s.eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    let profile = r.momentum.iter().filter(|m| m.eps == smallest).map(|m| m.distance).fold(f64::NAN, f64::max);
    checks.push(Check::at_most("momentum_profile", profile, tol.momentum_profile));
    transform_checks(&r.diagnostics, tol, checks);
    Ok(SweepOutcome {
        summary: r.summary,
        grids: r.grids,
        failures: r.failures,
        diagnostics: r.diagnostics,
        hypotheses: None,
        decay: None,
        momentum: r.momentum,
    })
}

/// The primary sweep with every hypothesis statistic, then (if configured)
/// the decay sweep whose statistic replaces the primary one in the report.
fn stability_stages(s: &StabilitySection, dir: &Path, record: &mut RunRecord, checks: &mut Vec<Check>) {
    let variant: Option<Stage<SweepOutcome>> = s.decay_variant.as_ref().map(|v| decay_stage(v, &dir.join("decay_variant")).into());
    let primary: Result<SweepOutcome> = (|| {
        let r = semiclassical_experiment(&s.primary)?;
        write_distances(dir, &r.rows)?;
        write_summary(dir, &r.summary)?;
        let mut h = r.hypotheses.ok_or_else(|| crate::Error::Config("hypothesis statistics were not computed".into()))?;
        if let Some(Stage::Done { report }) = &variant {
            let d = report.decay.clone().expect("decay stage sets it");
            let cfg = s.decay_variant.as_ref().and_then(|v| v.hypotheses.clone()).unwrap_or_default();
            h.decay_pass = decay_passes(&d, &cfg);
            h.report.decay = Some(d);
        }
        h.report.write_csvs(dir)?;
        checks.push(Check::holds("cells_complete", r.failures.is_empty()));
        checks.push(Check::at_most("regularity_spread", h.regularity_spread, hypotheses(s).regularity_ratio));
        checks.push(Check::holds("regularity", h.regularity_pass));
        checks.push(Check::holds("decay", h.decay_pass));
        checks.push(Check::holds("space_tightness", h.space_pass));
        checks.push(Check::holds("time_tightness", h.time_pass));
        checks.push(Check::holds("limit_continuity", h.limit_pass));
        Ok(SweepOutcome {
            summary: r.summary,
            grids: r.grids,
            failures: r.failures,
            diagnostics: r.diagnostics,
            hypotheses: Some(h),
            decay: None,
            momentum: Vec::new(),
        })
    })();
    record.stability = primary.into();
    if let Some(v) = variant {
        if let Stage::Done { report } = &v {
            checks.push(Check::holds("decay_variant_complete", report.failures.is_empty()));
        }
        record.decay_variant = v;
    } else {
        record.decay_variant = Stage::skipped("no decay variant configured");
    }
}

fn hypotheses(s: &StabilitySection) -> HypothesisConfig {
    s.primary.hypotheses.clone().unwrap_or_default()
}

fn decay_stage(v: &SemiclassicalConfig, dir: &Path) -> Result<SweepOutcome> {
    fs::create_dir_all(dir)?;
    let cfg = v.hypotheses.clone().unwrap_or_default();
    let r = semiclassical_experiment(&SemiclassicalConfig { hypotheses: None, ..v.clone() })?;
    write_distances(dir, &r.rows)?;
    write_summary(dir, &r.summary)?;
    let b = make_field(&v.field)?;
    let decay = decay_statistics(&b, &r.families, &cfg)?;
    write_csv(
        &dir.join("decay.csv"),
        &["delta", "eps", "value"],
        decay.deltas.iter().zip(&decay.values).flat_map(|(delta, row)| {
            v.eps_list.iter().zip(row).map(move |(e, x)| vec![fmt(*delta), fmt(*e), fmt(*x)])
        }),
    )?;
    Ok(SweepOutcome {
        summary: r.summary,
        grids: r.grids,
        failures: r.failures,
        diagnostics: r.diagnostics,
        hypotheses: None,
        decay: Some(decay),
        momentum: Vec::new(),
    })
}
