use serde::{Deserialize, Serialize};

use super::Observable;
use crate::{Error, Result};

/// Finite nonnegative measure `Σ_i w_i δ_{x_i}` on R^d.
///
/// Coordinates are stored flat (`coords[i*dim..(i+1)*dim]` is point `i`).
/// JSON form: `{"dim": d, "points": [[..], ..], "weights": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParticleMeasureJson", into = "ParticleMeasureJson")]
pub struct ParticleMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParticleMeasureJson {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<ParticleMeasureJson> for ParticleMeasure {
    type Error = Error;

    fn try_from(json: ParticleMeasureJson) -> Result<Self> {
        Self::from_points(json.dim, &json.points, json.weights)
    }
}

impl From<ParticleMeasure> for ParticleMeasureJson {
    fn from(m: ParticleMeasure) -> Self {
        let points = m.points().map(<[f64]>::to_vec).collect();
        Self { dim: m.dim, points, weights: m.weights }
    }
}

/// Tolerance on `|Σ w − 1|` for a measure to count as a probability.
pub const PROBABILITY_TOL: f64 = 1e-12;

impl ParticleMeasure {
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive".into()));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} coordinates do not describe {} points in dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("weight {i} is {}", weights[i])));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure(format!("point {} has a non-finite coordinate", i / dim)));
        }
        Ok(Self { dim, coords, weights })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords, weights)
    }

    /// Unit point mass at `x`.
    pub fn dirac(x: &[f64]) -> Self {
        Self { dim: x.len(), coords: x.to_vec(), weights: vec![1.0] }
    }

    /// Equal weights `1/N` on the given flat coordinates.
    pub fn uniform(dim: usize, coords: Vec<f64>) -> Result<Self> {
        let n = coords.len() / dim.max(1);
        let w = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        Self::new(dim, coords, vec![w; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= PROBABILITY_TOL
    }

    /// The measure with every weight multiplied by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.dim, self.coords.clone(), self.weights.iter().map(|w| w * factor).collect())
    }

    /// Measure with total mass 1 (error if the mass vanishes).
    pub fn normalized(&self) -> Result<Self> {
        let m = self.total_mass();
        if m <= 0.0 {
            return Err(Error::ZeroMass);
        }
        self.scaled(1.0 / m)
    }

    /// `∫ f dμ` for a plain closure, no dimension check.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.points().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    /// `∫ φ dμ = Σ_i w_i φ(x_i)`.
    pub fn integrate_test(&self, phi: &dyn Observable) -> Result<f64> {
        if phi.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: phi.dim() });
        }
        Ok(self.integrate(|x| phi.value(x)))
    }

    /// Image measure `T_# μ`: points mapped, weights untouched.
    ///
    /// The map writes `T(x)` into its output slice; an `Err` reports that `T`
    /// is undefined at `x` and aborts with the offending point index.
    pub fn pushforward<F>(&self, map: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) -> std::result::Result<(), String>,
    {
        let mut coords = vec![0.0; self.coords.len()];
        for (i, (x, out)) in self.points().zip(coords.chunks_exact_mut(self.dim)).enumerate() {
            map(x, out).map_err(|reason| Error::MapUndefined { index: i, reason })?;
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::MapUndefined { index: i, reason: "non-finite image".into() });
            }
        }
        Ok(Self { dim: self.dim, coords, weights: self.weights.clone() })
    }

    /// Sum of two measures on the same space (concatenated particles).
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&other.weights);
        Ok(Self { dim: self.dim, coords, weights })
    }

    /// Same points with new weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} weights for {} points",
                weights.len(),
                self.len()
            )));
        }
        Self::new(self.dim, self.coords.clone(), weights)
    }

    /// Sub-measure on the coordinates `axes` (marginal).
    pub fn marginal(&self, axes: &[usize]) -> Result<Self> {
        if let Some(&a) = axes.iter().find(|&&a| a >= self.dim) {
            return Err(Error::DimensionMismatch { expected: self.dim, found: a + 1 });
        }
        let coords = self.points().flat_map(|x| axes.iter().map(move |&a| x[a])).collect();
        Self::new(axes.len(), coords, self.weights.clone())
    }

    /// Coordinate-wise bounding box of the support, `None` when empty.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for x in self.points() {
            for a in 0..self.dim {
                lo[a] = lo[a].min(x[a]);
                hi[a] = hi[a].max(x[a]);
            }
        }
        Some((lo, hi))
    }

    /// Mean and per-axis variance under the normalized measure.
    pub fn moments(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.total_mass();
        if m <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let mut mean = vec![0.0; self.dim];
        for (x, w) in self.points().zip(&self.weights) {
            for a in 0..self.dim {
                mean[a] += w * x[a];
            }
        }
        mean.iter_mut().for_each(|v| *v /= m);
        let mut var = vec![0.0; self.dim];
        for (x, w) in self.points().zip(&self.weights) {
            for a in 0..self.dim {
                var[a] += w * (x[a] - mean[a]).powi(2);
            }
        }
        var.iter_mut().for_each(|v| *v /= m);
        Ok((mean, var))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::FnObservable;

    #[test]
    fn rejects_negative_weights_and_ragged_input() {
        assert!(ParticleMeasure::new(1, vec![0.0, 1.0], vec![0.5, -0.5]).is_err());
        assert!(ParticleMeasure::new(2, vec![0.0, 1.0, 2.0], vec![1.0]).is_err());
        assert!(ParticleMeasure::from_points(2, &[vec![0.0]], vec![1.0]).is_err());
    }

    #[test]
    fn integrate_test_trivial_cases() {
        let origin = ParticleMeasure::dirac(&[0.0, 0.0]);
        let sq = FnObservable::new(2, |x: &[f64]| x[0] * x[0]);
        assert_eq!(origin.integrate_test(&sq).unwrap(), 0.0);

        let two = ParticleMeasure::from_points(1, &[vec![-3.0], vec![7.0]], vec![0.5, 0.5]).unwrap();
        let one = FnObservable::new(1, |_: &[f64]| 1.0);
        assert_eq!(two.integrate_test(&one).unwrap(), 1.0);

        let wrong = FnObservable::new(3, |_: &[f64]| 1.0);
        assert!(matches!(
            two.integrate_test(&wrong),
            Err(Error::DimensionMismatch { expected: 1, found: 3 })
        ));
    }

    #[test]
    fn pushforward_identity_and_translation() {
        let mu = ParticleMeasure::from_points(2, &[vec![0.0, 1.0], vec![2.0, -1.0]], vec![0.25, 0.75])
            .unwrap();
        let same = mu.pushforward(|x, y| {
            y.copy_from_slice(x);
            Ok(())
        })
        .unwrap();
        assert_eq!(same, mu);

        let moved = mu
            .pushforward(|x, y| {
                y[0] = x[0] + 1.0;
                y[1] = x[1] - 2.0;
                Ok(())
            })
            .unwrap();
        assert_eq!(moved.point(1), &[3.0, -3.0]);
        assert_eq!(moved.total_mass(), mu.total_mass());
    }

    #[test]
    fn pushforward_reports_failing_index() {
        let mu = ParticleMeasure::from_points(1, &[vec![1.0], vec![0.0], vec![2.0]], vec![1.0; 3]).unwrap();
        let err = mu
            .pushforward(|x, y| {
                if x[0] == 0.0 {
                    return Err("hit the singular set".into());
                }
                y[0] = 1.0 / x[0];
                Ok(())
            })
            .unwrap_err();
        assert!(matches!(err, Error::MapUndefined { index: 1, .. }));
    }

    #[test]
    fn json_round_trip_uses_nested_points() {
        let mu = ParticleMeasure::from_points(2, &[vec![0.5, 1.5], vec![-1.0, 2.0]], vec![0.3, 0.7])
            .unwrap();
        let text = serde_json::to_string(&mu).unwrap();
        assert!(text.contains("[[0.5,1.5],[-1.0,2.0]]"));
        let back: ParticleMeasure = serde_json::from_str(&text).unwrap();
        assert_eq!(back, mu);
        assert!(serde_json::from_str::<ParticleMeasure>(
            r#"{"dim":1,"points":[[0.0]],"weights":[-1.0]}"#
        )
        .is_err());
    }
}
