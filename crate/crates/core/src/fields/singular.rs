use serde::{Deserialize, Serialize};

use crate::measures::BoxDomain;
use crate::{Error, Result};

/// Closed Lebesgue-negligible set in configuration space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SingularSet {
    Empty,
    /// Finitely many points.
    Points { points: Vec<Vec<f64>> },
    /// `origin + span(basis)`; the basis is stored orthonormalized.
    Affine { origin: Vec<f64>, basis: Vec<Vec<f64>> },
}

impl SingularSet {
    pub fn points(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Ok(Self::Empty);
        };
        let n = first.len();
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: p.len() });
        }
        Ok(Self::Points { points })
    }

    /// Affine subspace through `origin` spanned by `directions`
    /// (Gram–Schmidt orthonormalized; must be independent and proper).
    pub fn affine(origin: Vec<f64>, directions: Vec<Vec<f64>>) -> Result<Self> {
        let n = origin.len();
        if directions.len() >= n {
            return Err(Error::InvalidParameter(
                "affine singular set must be a proper subspace".into(),
            ));
        }
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for v in directions {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: v.len() });
            }
            let mut w = v.clone();
            for b in &basis {
                let dot: f64 = w.iter().zip(b).map(|(a, c)| a * c).sum();
                w.iter_mut().zip(b).for_each(|(a, c)| *a -= dot * c);
            }
            let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm < 1e-12 {
                return Err(Error::InvalidParameter("affine directions are dependent".into()));
            }
            w.iter_mut().for_each(|a| *a /= norm);
            basis.push(w);
        }
        Ok(Self::Affine { origin, basis })
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Self::Empty)
    }

    /// Nearest point of `S` to `x` (`None` for the empty set). Ties between
    /// point centers resolve to the first listed.
    pub fn nearest(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            Self::Empty => None,
            Self::Points { points } => points
                .iter()
                .map(|p| (dist2(x, p), p))
                .fold(None, |best: Option<(f64, &Vec<f64>)>, cur| match best {
                    Some(b) if b.0 <= cur.0 => Some(b),
                    _ => Some(cur),
                })
                .map(|(_, p)| p.clone()),
            Self::Affine { origin, basis } => {
                let rel: Vec<f64> = x.iter().zip(origin).map(|(a, o)| a - o).collect();
                let mut proj = origin.clone();
                for b in basis {
                    let dot: f64 = rel.iter().zip(b).map(|(a, c)| a * c).sum();
                    proj.iter_mut().zip(b).for_each(|(p, c)| *p += dot * c);
                }
                Some(proj)
            }
        }
    }

    /// Exact Euclidean distance; `+∞` for the empty set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Self::Empty => f64::INFINITY,
            Self::Points { points } => {
                points.iter().map(|p| dist2(x, p)).fold(f64::INFINITY, f64::min).sqrt()
            }
            Self::Affine { .. } => {
                let p = self.nearest(x).expect("nonempty");
                dist2(x, &p).sqrt()
            }
        }
    }

    /// Distance from a box (in configuration space) to `S`: exact for point
    /// sets, a lower bound `dist(center) − half-diagonal` for affine sets.
    pub fn distance_to_box(&self, domain: &BoxDomain) -> f64 {
        match self {
            Self::Empty => f64::INFINITY,
            Self::Points { points } => {
                points.iter().map(|p| domain.distance_to(p)).fold(f64::INFINITY, f64::min)
            }
            Self::Affine { .. } => {
                (self.distance(&domain.center()) - domain.half_diagonal()).max(0.0)
            }
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_distances() {
        let s = SingularSet::points(vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(s.distance(&[3.0, 4.0]), 5.0);
        assert_eq!(s.distance(&[0.0, 0.0]), 0.0);
        let two = SingularSet::points(vec![vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(two.distance(&[0.0, 1.0]), 2f64.sqrt());
        assert_eq!(SingularSet::Empty.distance(&[1.0]), f64::INFINITY);
    }

    #[test]
    fn affine_distance_and_projection() {
        let line = SingularSet::affine(vec![0.0, 1.0, 0.0], vec![vec![2.0, 0.0, 0.0]]).unwrap();
        assert!((line.distance(&[5.0, 4.0, 4.0]) - 5.0).abs() < 1e-15);
        assert_eq!(line.nearest(&[5.0, 4.0, 4.0]).unwrap(), vec![5.0, 1.0, 0.0]);
        assert!(SingularSet::affine(vec![0.0], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn box_distance() {
        let s = SingularSet::points(vec![vec![0.0]]).unwrap();
        let b = BoxDomain::new(vec![0.5], vec![2.0]).unwrap();
        assert_eq!(s.distance_to_box(&b), 0.5);
    }
}
