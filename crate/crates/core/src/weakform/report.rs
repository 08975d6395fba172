use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::Result;

use super::{DecayStat, LimitContinuityStat, RegularityStat, TightnessStat};

/// The five hypothesis statistics over a family sequence plus the gap to the
/// reference flow. Index `n` of every per-family vector matches `labels[n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Name of the sequence parameter (e.g. `eps`).
    pub parameter: String,
    pub labels: Vec<f64>,
    pub regularity: Vec<RegularityStat>,
    pub decay: Option<DecayStat>,
    pub space_tightness: Vec<TightnessStat>,
    pub time_tightness: Vec<TightnessStat>,
    pub limit_continuity: LimitContinuityStat,
    pub gaps: Vec<f64>,
}

impl StabilityReport {
    /// Every statistic finite and nonnegative.
    pub fn is_well_formed(&self) -> bool {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        self.regularity.iter().all(|r| ok(r.value))
            && self.decay.as_ref().is_none_or(|d| d.values.iter().flatten().all(|v| ok(*v)))
            && self.space_tightness.iter().chain(&self.time_tightness).all(|t| t.fractions.iter().all(|f| ok(*f)))
            && self.limit_continuity.values.iter().all(|v| ok(*v))
            && self.gaps.iter().all(|v| ok(*v))
    }

    pub fn pass(&self) -> bool {
        self.regularity.iter().all(|r| r.pass)
            && self.decay.as_ref().is_none_or(|d| d.pass)
            && self.space_tightness.iter().all(|t| t.pass)
            && self.time_tightness.iter().all(|t| t.pass)
            && self.limit_continuity.pass
    }

    /// One CSV per hypothesis plus the gap sequence; returns the paths written.
    pub fn write_csvs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let p = &self.parameter;
        let mut written = Vec::new();
        let mut open = |name: &str, header: &[&str]| -> Result<csv::Writer<std::fs::File>> {
            let path = dir.join(name);
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(header)?;
            written.push(path);
            Ok(w)
        };

        let mut w = open("uniform_regularity.csv", &[p, "value", "bound", "pass"])?;
        for (l, r) in self.labels.iter().zip(&self.regularity) {
            w.write_record([fmt(*l), fmt(r.value), fmt(r.bound), r.pass.to_string()])?;
        }
        w.flush()?;

        let mut w = open("decay.csv", &["delta", p, "value"])?;
        if let Some(d) = &self.decay {
            for (delta, row) in d.deltas.iter().zip(&d.values) {
                for (l, v) in self.labels.iter().zip(row) {
                    w.write_record([fmt(*delta), fmt(*l), fmt(*v)])?;
                }
            }
        }
        w.flush()?;

        for (name, col, stats) in [
            ("space_tightness.csv", "radius", &self.space_tightness),
            ("time_tightness.csv", "m", &self.time_tightness),
        ] {
            let mut w = open(name, &[p, col, "fraction"])?;
            for (l, s) in self.labels.iter().zip(stats.iter()) {
                for (x, f) in s.params.iter().zip(&s.fractions) {
                    w.write_record([fmt(*l), fmt(*x), fmt(*f)])?;
                }
            }
            w.flush()?;
        }

        let mut w = open("limit_continuity.csv", &[p, "value"])?;
        for (l, v) in self.labels.iter().zip(&self.limit_continuity.values) {
            w.write_record([fmt(*l), fmt(*v)])?;
        }
        w.flush()?;

        let mut w = open("stability_gap.csv", &[p, "gap"])?;
        for (l, v) in self.labels.iter().zip(&self.gaps) {
            w.write_record([fmt(*l), fmt(*v)])?;
        }
        w.flush()?;
        Ok(written)
    }
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:e}")
}
