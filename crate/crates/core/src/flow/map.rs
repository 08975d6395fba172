use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::fields::PhaseSpaceField;
use crate::measures::{MeasureEnsemble, ParticleMeasure};
use crate::weakform::MeasureCurve;
use crate::{Error, Result};

use super::trajectory::integrate_on;
use super::{StepControl, Trajectory, TrajectoryStatus};

/// Trajectories of every point of a base cloud on a shared time grid.
///
/// States are stored time-major, so each time slice is contiguous.
#[derive(Debug)]
pub struct FlowMap {
    base: ParticleMeasure,
    field: PhaseSpaceField,
    horizon: f64,
    ctrl: StepControl,
    times: Arc<[f64]>,
    states: Vec<f64>,
    statuses: Vec<TrajectoryStatus>,
    min_dists: Vec<f64>,
    index: OnceLock<HashMap<Vec<u64>, usize>>,
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

impl FlowMap {
    /// Assembles a map from precomputed parts (used for fixtures and for
    /// reading bundles back). `states` is time-major.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        base: ParticleMeasure,
        field: PhaseSpaceField,
        horizon: f64,
        ctrl: StepControl,
        times: Arc<[f64]>,
        states: Vec<f64>,
        statuses: Vec<TrajectoryStatus>,
        min_dists: Vec<f64>,
    ) -> Result<Self> {
        let (n, d) = (base.len(), base.dim());
        if d != field.dim() {
            return Err(Error::DimensionMismatch { expected: field.dim(), found: d });
        }
        if states.len() != n * d * times.len() || statuses.len() != n || min_dists.len() != n {
            return Err(Error::InvalidParameter("flow map parts have inconsistent sizes".into()));
        }
        Ok(Self { base, field, horizon, ctrl, times, states, statuses, min_dists, index: OnceLock::new() })
    }

    pub fn base(&self) -> &ParticleMeasure {
        &self.base
    }

    pub fn field(&self) -> &PhaseSpaceField {
        &self.field
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn control(&self) -> &StepControl {
        &self.ctrl
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn shared_times(&self) -> Arc<[f64]> {
        self.times.clone()
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn statuses(&self) -> &[TrajectoryStatus] {
        &self.statuses
    }

    pub fn min_singular_dists(&self) -> &[f64] {
        &self.min_dists
    }

    /// Raw time-major states.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// `X(t_k, x_i)`.
    pub fn state(&self, k: usize, i: usize) -> &[f64] {
        let d = self.dim();
        let off = (k * self.len() + i) * d;
        &self.states[off..off + d]
    }

    /// All states at `t_k`, flat.
    pub fn slice_coords(&self, k: usize) -> &[f64] {
        let w = self.len() * self.dim();
        &self.states[k * w..(k + 1) * w]
    }

    pub fn trajectory(&self, i: usize) -> Trajectory {
        let states = (0..self.times.len()).flat_map(|k| self.state(k, i).iter().copied()).collect();
        Trajectory::from_parts(self.times.clone(), self.dim(), states, self.statuses[i], self.min_dists[i])
            .expect("consistent by construction")
    }

    pub fn invalid_mass(&self) -> f64 {
        self.base
            .weights()
            .iter()
            .zip(&self.statuses)
            .filter(|(_, s)| !s.is_complete())
            .map(|(w, _)| w)
            .sum()
    }

    /// Invalid mass over total mass.
    pub fn invalid_fraction(&self) -> f64 {
        let total = self.base.total_mass();
        if total > 0.0 {
            self.invalid_mass() / total
        } else {
            0.0
        }
    }

    /// `X(t_k, ·)_# ν` restricted to complete trajectories.
    pub fn pushforward_slice(&self, k: usize) -> Result<ParticleMeasure> {
        let all: Vec<usize> = (0..self.len()).collect();
        let (coords, weights) = self.gather(k, &all, self.base.weights());
        ParticleMeasure::new(self.dim(), coords, weights)
    }

    fn gather(&self, k: usize, idx: &[usize], weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut coords = Vec::with_capacity(idx.len() * d);
        let mut ws = Vec::with_capacity(idx.len());
        for (&i, &w) in idx.iter().zip(weights) {
            if self.statuses[i].is_complete() {
                coords.extend_from_slice(self.state(k, i));
                ws.push(w);
            }
        }
        (coords, ws)
    }

    /// Position of each point of `mu` in the base cloud (exact match).
    pub fn locate(&self, mu: &ParticleMeasure) -> Result<Vec<usize>> {
        if mu.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: mu.dim() });
        }
        let index = self.index.get_or_init(|| {
            let mut m = HashMap::with_capacity(self.len());
            for (i, p) in self.base.points().enumerate() {
                m.entry(key(p)).or_insert(i);
            }
            m
        });
        mu.points()
            .enumerate()
            .map(|(j, p)| index.get(&key(p)).copied().ok_or(Error::OffBaseCloud { index: j }))
            .collect()
    }

    /// The superposition curve `μ_t = ∫ δ_{X(t,x)} dμ(x)`; trajectories that
    /// are not complete are dropped and their mass recorded as a deficit.
    pub fn superpose(&self, mu: &ParticleMeasure) -> Result<MeasureCurve> {
        let idx = self.locate(mu)?;
        let deficit: f64 = idx
            .iter()
            .zip(mu.weights())
            .filter(|(&i, _)| !self.statuses[i].is_complete())
            .map(|(_, w)| w)
            .sum();
        let slices = (0..self.times.len())
            .map(|k| {
                if k == 0 && deficit == 0.0 {
                    return Ok(mu.clone());
                }
                let (coords, ws) = self.gather(k, &idx, mu.weights());
                ParticleMeasure::new(self.dim(), coords, ws)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MeasureCurve::new(self.times.clone(), slices, "superposition")?.with_mass_deficit(deficit))
    }
}

/// Integrates every base point on the shared output grid.
pub fn flow_map(b: &PhaseSpaceField, nu: &ParticleMeasure, horizon: f64, ctrl: &StepControl) -> Result<FlowMap> {
    ctrl.validate()?;
    if nu.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), found: nu.dim() });
    }
    let times = ctrl.output_times(horizon);
    let trajectories: Vec<Trajectory> = nu
        .coords()
        .par_chunks_exact(nu.dim())
        .map(|z0| {
            // base points on S form a null set; they are excised rather than fatal
            if !b.singular_set().is_empty() && b.dist_to_singular(&z0[..b.n()]) == 0.0 {
                return Ok(Trajectory::stopped_at_start(times.clone(), z0));
            }
            integrate_on(b, z0, horizon, ctrl, times.clone())
        })
        .collect::<Result<_>>()?;
    let (n, d, nt) = (nu.len(), nu.dim(), times.len());
    let statuses = trajectories.iter().map(|t| t.status()).collect();
    let min_dists = trajectories.iter().map(|t| t.min_singular_dist()).collect();
    let mut states = vec![0.0; n * d * nt];
    for (i, tr) in trajectories.into_iter().enumerate() {
        for (k, z) in tr.into_states().chunks_exact(d).enumerate() {
            let off = (k * n + i) * d;
            states[off..off + d].copy_from_slice(z);
        }
    }
    let map = FlowMap::from_parts(nu.clone(), b.clone(), horizon, ctrl.clone(), times, states, statuses, min_dists)?;
    let fraction = map.invalid_fraction();
    if fraction > ctrl.max_invalid {
        return Err(Error::InvalidMassFraction { fraction, max: ctrl.max_invalid });
    }
    if fraction > 0.0 {
        log::info!("flow map: invalid mass fraction {fraction:.3e}");
    }
    Ok(map)
}

/// One superposition curve per ensemble member, built on a single flow map
/// whose base cloud is `Eν`.
#[derive(Debug)]
pub struct MeasureFlow {
    pub flow: FlowMap,
    pub weights: Vec<f64>,
    pub curves: Vec<MeasureCurve>,
}

impl MeasureFlow {
    /// `E(μ(t_k, ·)_# ν)` assembled from the member slices.
    pub fn expectation_slice(&self, k: usize) -> Result<ParticleMeasure> {
        let d = self.flow.dim();
        let mut coords = Vec::new();
        let mut ws = Vec::new();
        for (w, c) in self.weights.iter().zip(&self.curves) {
            let s = c.slice(k);
            coords.extend_from_slice(s.coords());
            ws.extend(s.weights().iter().map(|m| w * m));
        }
        ParticleMeasure::new(d, coords, ws)
    }
}

pub fn measure_flow(b: &PhaseSpaceField, nu: &MeasureEnsemble, horizon: f64, ctrl: &StepControl) -> Result<MeasureFlow> {
    if nu.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let d = nu.dim();
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for m in nu.members() {
        for (p, w) in m.measure.points().zip(m.measure.weights()) {
            let slot = *seen.entry(key(p)).or_insert_with(|| {
                coords.extend_from_slice(p);
                weights.push(0.0);
                weights.len() - 1
            });
            weights[slot] += m.weight * w;
        }
    }
    let base = ParticleMeasure::new(d, coords, weights)?;
    let flow = flow_map(b, &base, horizon, ctrl)?;
    let curves = nu
        .members()
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let c = flow.superpose(&m.measure)?;
            let deficit = c.mass_deficit();
            Ok(MeasureCurve::new(c.shared_times(), c.slices().to_vec(), format!("member {j}"))?
                .with_mass_deficit(deficit))
        })
        .collect::<Result<Vec<_>>>()?;
    let weights = nu.members().iter().map(|m| m.weight).collect();
    Ok(MeasureFlow { flow, weights, curves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_field, FieldSpec};

    fn cloud() -> ParticleMeasure {
        ParticleMeasure::from_points(2, &[vec![0.0, 1.0], vec![1.0, 0.0], vec![-0.5, 0.25]], vec![0.2, 0.3, 0.5])
            .unwrap()
    }

    #[test]
    fn free_flow_slices_are_sheared_cloud() {
        let b = make_field(&FieldSpec::new("free")).unwrap();
        let ctrl = StepControl::with_dt(0.01).samples(Some(11));
        let f = flow_map(&b, &cloud(), 1.0, &ctrl).unwrap();
        assert_eq!(f.invalid_fraction(), 0.0);
        for (k, &t) in f.times().iter().enumerate() {
            for (i, p) in cloud().points().enumerate() {
                let z = f.state(k, i);
                assert!((z[0] - (p[0] + t * p[1])).abs() < 1e-13);
            }
        }
        let tr = f.trajectory(2);
        assert_eq!(tr.initial(), &[-0.5, 0.25]);
    }

    #[test]
    fn superpose_dirac_and_off_cloud() {
        let b = make_field(&FieldSpec::new("harmonic")).unwrap();
        let f = flow_map(&b, &cloud(), 1.0, &StepControl::with_dt(0.01).samples(Some(5))).unwrap();
        let c = f.superpose(&ParticleMeasure::dirac(&[1.0, 0.0])).unwrap();
        for (k, s) in c.slices().iter().enumerate() {
            assert_eq!(s.point(0), f.state(k, 1));
            assert_eq!(s.total_mass(), 1.0);
        }
        assert!(matches!(
            f.superpose(&ParticleMeasure::dirac(&[1.0, 1e-300])),
            Err(Error::OffBaseCloud { index: 0 })
        ));
    }

    #[test]
    fn singular_hits_are_excluded_with_deficit() {
        let b = make_field(&FieldSpec::new("coulomb").param("k", 1e-6)).unwrap();
        // the first point heads straight into the center
        let nu = ParticleMeasure::from_points(2, &[vec![0.5, -1.0], vec![2.0, 1.0]], vec![0.25, 0.75]).unwrap();
        let ctrl = StepControl { max_invalid: 0.5, ..StepControl::with_dt(0.01).samples(Some(3)) };
        let f = flow_map(&b, &nu, 1.0, &ctrl).unwrap();
        assert!(matches!(f.statuses()[0], TrajectoryStatus::SingularHit { .. }));
        assert_eq!(f.invalid_fraction(), 0.25);
        let c = f.superpose(&nu).unwrap();
        assert_eq!(c.mass_deficit(), 0.25);
        assert_eq!(c.slice(2).len(), 1);
        let strict = StepControl { max_invalid: 0.1, ..ctrl };
        assert!(matches!(flow_map(&b, &nu, 1.0, &strict), Err(Error::InvalidMassFraction { .. })));
    }
}
