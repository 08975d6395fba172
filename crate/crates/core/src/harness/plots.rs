use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{write_csv, write_density_profile, write_oracle_tables};
use super::{RunRecord, Stage, SweepOutcome};
use crate::weakform::fmt;
use crate::Result;

/// What [`emit_plotdata`] wrote and what it could not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotManifest {
    pub experiment: String,
    pub files: Vec<String>,
    /// `(figure, reason)` for every figure the record cannot supply.
    pub gaps: Vec<(String, String)>,
}

const README_HEAD: &str = "# Plot data\n\nCSV tables only; every file has a header row.\n\n";

fn describe(file: &str) -> &'static str {
    match file {
        "D_vs_eps.csv" => {
            "D(ε) with log10 columns (log-log plot). Supports convergence of the Husimi transforms to the classical \
             flow: D should decrease as ε → 0."
        }
        "uniform_regularity.csv" => {
            "Largest P-averaged density of the Husimi family against test bumps, per ε. The regularity hypothesis \
             asks for a bound uniform in ε."
        }
        "decay.csv" => {
            "P-averaged time integral of 1/(dist(x,S)^β + δ), per δ and ε. The decay hypothesis asks for \
             values bounded as δ → 0."
        }
        "space_tightness.csv" => {
            "Weighted fraction of samples leaving mass above the level outside B_R, per ε and R. Tightness in \
             space: fractions fall to zero as R grows."
        }
        "time_tightness.csv" => {
            "Weighted fraction of samples whose tested curves vary by more than M in time, per ε and M. \
             Tightness in time: fractions fall to zero as M grows."
        }
        "limit_continuity.csv" => {
            "Weak residual of the continuity equation on the Husimi family, per ε. Limits solve the equation, so \
             the residual should vanish with ε (down to the time-discretisation floor)."
        }
        "density_profile.csv" => {
            "Largest KDE density of the pushed-forward cloud at the checked times against the compression \
             bound C and the slack threshold."
        }
        "fv_vs_particles.csv" => "L¹ gap between particle and finite-volume densities at two resolutions; shrinks on refinement.",
        "weak_residual.csv" => "Weak residual of a superposition curve per time grid; drops with each doubling.",
        "uniqueness.csv" => "Distance between two independently configured flow constructions at shared times.",
        _ => "",
    }
}

/// Writes the per-figure tables for `record` into `dir`, plus `README.md`
/// and `plots.json`. Missing stages become entries in the gap list.
pub fn emit_plotdata(record: &RunRecord, dir: &Path) -> Result<PlotManifest> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut gaps = Vec::new();
    let mut gap = |figure: &str, why: String| gaps.push((figure.to_string(), why));

    match record.config.experiment.as_str() {
        "semiclassical" => d_vs_eps(&record.semiclassical, dir, &mut files, &mut gap)?,
        "alpha1" => d_vs_eps(&record.alpha1, dir, &mut files, &mut gap)?,
        "stability-hypotheses" => {
            d_vs_eps(&record.stability, dir, &mut files, &mut gap)?;
            match record.stability.report().and_then(|s| s.hypotheses.as_ref()) {
                Some(h) => {
                    for p in h.report.write_csvs(dir)? {
                        let name = file_name(&p);
                        // the gap sequence duplicates D_vs_eps.csv
                        if name == "stability_gap.csv" {
                            fs::remove_file(&p)?;
                        } else {
                            files.push(name);
                        }
                    }
                }
                None => gap("hypothesis statistics", stage_reason(&record.stability)),
            }
        }
        "rlf-check" => match record.rlf_check.report() {
            Some(r) => {
                write_density_profile(dir, &r.report)?;
                files.push("density_profile.csv".into());
            }
            None => gap("density_profile.csv", stage_reason(&record.rlf_check)),
        },
        "oracle-consistency" => match record.oracle.report() {
            Some(o) => {
                write_oracle_tables(o, dir)?;
                files.extend(["fv_vs_particles.csv", "weak_residual.csv", "uniqueness.csv"].map(String::from));
            }
            None => gap("oracle tables", stage_reason(&record.oracle)),
        },
        other => gap("all", format!("unknown experiment `{other}`")),
    }

    let manifest = PlotManifest { experiment: record.config.experiment.clone(), files, gaps };
    let mut readme = String::from(README_HEAD);
    for f in &manifest.files {
        readme.push_str(&format!("- `{f}`: {}\n", describe(f)));
    }
    if !manifest.gaps.is_empty() {
        readme.push_str("\nNot emitted:\n\n");
        for (f, why) in &manifest.gaps {
            readme.push_str(&format!("- {f}: {why}\n"));
        }
    }
    fs::write(dir.join("README.md"), readme)?;
    fs::write(dir.join("plots.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn stage_reason<T>(s: &Stage<T>) -> String {
    match s {
        Stage::Done { .. } => "no data".into(),
        Stage::Skipped { reason } => format!("stage skipped: {reason}"),
        Stage::Failed { reason } => format!("stage failed: {reason}"),
    }
}

fn d_vs_eps(
    stage: &Stage<SweepOutcome>,
    dir: &Path,
    files: &mut Vec<String>,
    gap: &mut impl FnMut(&str, String),
) -> Result<()> {
    let Some(s) = stage.report() else {
        gap("D_vs_eps.csv", stage_reason(stage));
        return Ok(());
    };
    let rows: Vec<Vec<String>> = s
        .summary
        .iter()
        .filter_map(|e| e.d.map(|d| vec![fmt(e.eps), fmt(d), fmt(e.eps.log10()), fmt(d.log10())]))
        .collect();
    if rows.len() < s.summary.len() {
        gap("D_vs_eps.csv", format!("{} of {} ε values have no D", s.summary.len() - rows.len(), s.summary.len()));
    }
    let path: PathBuf = dir.join("D_vs_eps.csv");
    write_csv(&path, &["eps", "D", "log10_eps", "log10_D"], rows)?;
    files.push("D_vs_eps.csv".into());
    Ok(())
}
