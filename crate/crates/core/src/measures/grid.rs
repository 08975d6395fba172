use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::BoxDomain;
use crate::{Error, Result};

/// Piecewise-constant nonnegative density on a regular cell grid.
///
/// Cells are stored row-major with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    domain: BoxDomain,
    cells_per_axis: Vec<usize>,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(domain: BoxDomain, cells_per_axis: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if cells_per_axis.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: cells_per_axis.len(),
            });
        }
        if cells_per_axis.contains(&0) {
            return Err(Error::InvalidParameter("cells per axis must be positive".into()));
        }
        let count: usize = cells_per_axis.iter().product();
        if values.len() != count {
            return Err(Error::InvalidParameter(format!(
                "{} values for {count} cells",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("density value {v}")));
        }
        Ok(Self { domain, cells_per_axis, values })
    }

    pub fn zeros(domain: BoxDomain, cells_per_axis: Vec<usize>) -> Result<Self> {
        let count = cells_per_axis.iter().product();
        Self::new(domain, cells_per_axis, vec![0.0; count])
    }

    /// Samples `f` at cell centers (negative values are rejected).
    pub fn from_fn<F: Fn(&[f64]) -> f64>(
        domain: BoxDomain,
        cells_per_axis: Vec<usize>,
        f: F,
    ) -> Result<Self> {
        let mut grid = Self::zeros(domain, cells_per_axis)?;
        let mut center = vec![0.0; grid.dim()];
        for i in 0..grid.values.len() {
            grid.cell_center_into(i, &mut center);
            grid.values[i] = f(&center);
        }
        Self::new(grid.domain, grid.cells_per_axis, grid.values)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells_per_axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.domain.width(axis) / self.cells_per_axis[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Multi-index of flat cell `i`.
    pub fn unravel(&self, mut i: usize, out: &mut [usize]) {
        for a in (0..self.dim()).rev() {
            out[a] = i % self.cells_per_axis[a];
            i /= self.cells_per_axis[a];
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.cells_per_axis).fold(0, |acc, (k, n)| acc * n + k)
    }

    pub fn cell_center_into(&self, i: usize, out: &mut [f64]) {
        let mut rem = i;
        for a in (0..self.dim()).rev() {
            let k = rem % self.cells_per_axis[a];
            rem /= self.cells_per_axis[a];
            out[a] = self.domain.lo[a] + (k as f64 + 0.5) * self.spacing(a);
        }
    }

    pub fn cell_center(&self, i: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        self.cell_center_into(i, &mut c);
        c
    }

    /// `Σ values · cell volume`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Cell-wise scaling by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.domain.clone(),
            self.cells_per_axis.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    /// `∫ |self − other| dx` on identical grids.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.domain != other.domain || self.cells_per_axis != other.cells_per_axis {
            return Err(Error::IndexMismatch("grids differ".into()));
        }
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum();
        Ok(s * self.cell_volume())
    }

    /// CSV with header `index,c0,..,c{d-1},value`, one row per cell.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["index".to_string()];
        header.extend((0..self.dim()).map(|a| format!("c{a}")));
        header.push("value".into());
        w.write_record(&header)?;
        let mut center = vec![0.0; self.dim()];
        for (i, v) in self.values.iter().enumerate() {
            self.cell_center_into(i, &mut center);
            let mut row = vec![i.to_string()];
            row.extend(center.iter().map(|c| format!("{c:e}")));
            row.push(format!("{v:e}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads values from the CSV form onto a known grid layout.
    pub fn read_csv<R: Read>(domain: BoxDomain, cells_per_axis: Vec<usize>, reader: R) -> Result<Self> {
        let mut grid = Self::zeros(domain, cells_per_axis)?;
        let d = grid.dim();
        let mut rdr = csv::Reader::from_reader(reader);
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Config("short CSV row".into()))?
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad CSV number: {e}")))
            };
            let idx = parse(0)? as usize;
            if idx >= grid.len() {
                return Err(Error::Config(format!("cell index {idx} out of range")));
            }
            grid.values[idx] = parse(d + 1)?;
        }
        Self::new(grid.domain, grid.cells_per_axis, grid.values)
    }
}
