//! Plain-text bundle for a [`FlowMap`]: `manifest.json`, `times.csv`,
//! `states.csv` (time index, point index, state components) and
//! `statuses.csv` (point index, status, stop time, min distance to `S`, weight).

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fields::PhaseSpaceField;
use crate::measures::ParticleMeasure;
use crate::{Error, Result};

use super::{FlowMap, StepControl, TrajectoryStatus};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleManifest {
    pub dim: usize,
    pub points: usize,
    pub times: usize,
    pub horizon: f64,
    pub control: StepControl,
    pub field: PhaseSpaceField,
    pub files: Vec<String>,
}

pub fn write_bundle(f: &FlowMap, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = BundleManifest {
        dim: f.dim(),
        points: f.len(),
        times: f.times().len(),
        horizon: f.horizon(),
        control: f.control().clone(),
        field: f.field().clone(),
        files: vec!["times.csv".into(), "states.csv".into(), "statuses.csv".into()],
    };
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("manifest.json"))?), &manifest)?;

    let mut w = csv::Writer::from_path(dir.join("times.csv"))?;
    w.write_record(["k", "t"])?;
    for (k, t) in f.times().iter().enumerate() {
        w.write_record([k.to_string(), format!("{t:e}")])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("states.csv"))?;
    let mut header = vec!["k".to_string(), "i".to_string()];
    header.extend((0..f.dim()).map(|a| format!("z{a}")));
    w.write_record(&header)?;
    for k in 0..f.times().len() {
        for i in 0..f.len() {
            let mut row = vec![k.to_string(), i.to_string()];
            row.extend(f.state(k, i).iter().map(|v| format!("{v:e}")));
            w.write_record(&row)?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("statuses.csv"))?;
    w.write_record(["i", "status", "time", "min_singular_dist", "weight"])?;
    for i in 0..f.len() {
        let s = f.statuses()[i];
        let time = s.time().map(|t| format!("{t:e}")).unwrap_or_default();
        w.write_record([
            i.to_string(),
            s.label().to_string(),
            time,
            format!("{:e}", f.min_singular_dists()[i]),
            format!("{:e}", f.base().weights()[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::InvalidParameter(format!("bad number `{s}` in bundle")))
}

pub fn read_bundle(dir: &Path) -> Result<FlowMap> {
    let m: BundleManifest = serde_json::from_reader(File::open(dir.join("manifest.json"))?)?;
    let mut times = Vec::with_capacity(m.times);
    for row in csv::Reader::from_path(dir.join("times.csv"))?.records() {
        times.push(parse(&row?[1])?);
    }
    let mut states = Vec::with_capacity(m.times * m.points * m.dim);
    for row in csv::Reader::from_path(dir.join("states.csv"))?.records() {
        let row = row?;
        for a in 0..m.dim {
            states.push(parse(&row[2 + a])?);
        }
    }
    let (mut statuses, mut min_dists, mut weights) = (Vec::new(), Vec::new(), Vec::new());
    for row in csv::Reader::from_path(dir.join("statuses.csv"))?.records() {
        let row = row?;
        let status = match &row[1] {
            "complete" => TrajectoryStatus::Complete,
            "singular_hit" => TrajectoryStatus::SingularHit { time: parse(&row[2])? },
            "escaped" => TrajectoryStatus::Escaped { time: parse(&row[2])? },
            other => return Err(Error::InvalidParameter(format!("unknown status `{other}`"))),
        };
        statuses.push(status);
        min_dists.push(parse(&row[3])?);
        weights.push(parse(&row[4])?);
    }
    if states.len() < m.points * m.dim {
        return Err(Error::InvalidParameter("bundle has no states".into()));
    }
    let base = ParticleMeasure::new(m.dim, states[..m.points * m.dim].to_vec(), weights)?;
    FlowMap::from_parts(base, m.field, m.horizon, m.control, times.into(), states, statuses, min_dists)
}
