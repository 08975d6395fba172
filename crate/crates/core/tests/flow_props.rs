mod common;

use common::harmonic_exact;
use proptest::prelude::*;
use rlf_core::fields::{make_field, FieldSpec, PhaseSpaceField};
use rlf_core::flow::{flow_map, integrate_trajectory, ode_residual, StepControl};
use rlf_core::measures::{sampling, BoxDomain, FnObservable, ParticleMeasure, TestFunctionDictionary};
use rlf_core::weakform::curve_sup_distance;

fn field(family: &str) -> PhaseSpaceField {
    make_field(&FieldSpec::new(family)).unwrap()
}

// smooth but not integrable in closed form
fn anharmonic() -> PhaseSpaceField {
    make_field(&FieldSpec::new("harmonic").param("omega", 0.8).with_bounded("cosine", &[("a", 0.5), ("kappa", 2.0)]))
        .unwrap()
}

fn end_state(b: &PhaseSpaceField, z0: &[f64], horizon: f64, dt: f64) -> Vec<f64> {
    let ctrl = StepControl { samples: Some(2), ..StepControl::with_dt(dt) };
    integrate_trajectory(b, z0, horizon, &ctrl).unwrap().last().to_vec()
}

fn relative_energy_drift(b: &PhaseSpaceField, z0: &[f64]) -> f64 {
    let ctrl = StepControl { samples: Some(101), ..StepControl::with_dt(1e-3) };
    let tr = integrate_trajectory(b, z0, 10.0, &ctrl).unwrap();
    assert!(tr.is_complete());
    let h0 = b.hamiltonian(z0);
    (0..tr.len()).map(|k| (b.hamiltonian(tr.state(k)) - h0).abs()).fold(0.0, f64::max) / h0.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn free_flow_is_exact(x in -5.0..5.0f64, y in -5.0..5.0f64, p in -3.0..3.0f64, q in -3.0..3.0f64) {
        let b = make_field(&FieldSpec { n: 2, ..FieldSpec::new("free") }).unwrap();
        let ctrl = StepControl { samples: Some(11), ..StepControl::with_dt(1e-2) };
        let tr = integrate_trajectory(&b, &[x, y, p, q], 1.0, &ctrl).unwrap();
        for (k, &t) in tr.times().iter().enumerate() {
            let z = tr.state(k);
            let want = [x + t * p, y + t * q, p, q];
            for a in 0..4 {
                prop_assert!((z[a] - want[a]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn harmonic_energy_is_conserved(x in -2.0..2.0f64, p in -2.0..2.0f64) {
        prop_assume!(x.hypot(p) > 0.1);
        prop_assert!(relative_energy_drift(&field("harmonic"), &[x, p]) <= 1e-8);
    }

    #[test]
    fn coulomb_energy_is_conserved(d in 0.5..3.0f64, side in prop::bool::ANY, p in -2.0..2.0f64) {
        let b = make_field(&FieldSpec::new("coulomb").param("k", 1.0)).unwrap();
        let x = if side { d } else { -d };
        prop_assert!(relative_energy_drift(&b, &[x, p]) <= 1e-6);
    }

    #[test]
    fn rk4_error_drops_eightfold_per_halving(x in -2.0..2.0f64, p in -2.0..2.0f64) {
        let exact = harmonic_exact(x, p, 1.0, 1.0);
        let err = |dt: f64| {
            let z = end_state(&field("harmonic"), &[x, p], 1.0, dt);
            (z[0] - exact.0).hypot(z[1] - exact.1)
        };
        let (e1, e2, e3) = (err(0.1), err(0.05), err(0.025));
        prop_assume!(e3 > 1e-14);
        prop_assert!(e1 / e2 >= 8.0 && e2 / e3 >= 8.0, "{e1:e} {e2:e} {e3:e}");
    }

    #[test]
    fn flow_is_a_semigroup(x in -2.0..2.0f64, p in -2.0..2.0f64, split in 1usize..10) {
        let b = anharmonic();
        let s = split as f64 / 10.0;
        let direct = end_state(&b, &[x, p], 1.0, 1e-3);
        let mid = end_state(&b, &[x, p], s, 1e-3);
        let composed = end_state(&b, &mid, 1.0 - s, 1e-3);
        prop_assert!((direct[0] - composed[0]).hypot(direct[1] - composed[1]) <= 1e-8);
    }

    #[test]
    fn flow_preserves_phase_volume(x in -2.0..2.0f64, p in -2.0..2.0f64) {
        let b = anharmonic();
        let h = 1e-5;
        let col = |dz: [f64; 2]| {
            let up = end_state(&b, &[x + dz[0], p + dz[1]], 2.0, 1e-3);
            let dn = end_state(&b, &[x - dz[0], p - dz[1]], 2.0, 1e-3);
            [(up[0] - dn[0]) / (2.0 * h), (up[1] - dn[1]) / (2.0 * h)]
        };
        let (c1, c2) = (col([h, 0.0]), col([0.0, h]));
        let det = c1[0] * c2[1] - c1[1] * c2[0];
        prop_assert!((det - 1.0).abs() <= 1e-6, "det = {det}");
    }

    #[test]
    fn superposition_is_linear(a in 0.1..2.0f64, c in 0.1..2.0f64, seed in 0u64..1000) {
        let b = anharmonic();
        let box2 = BoxDomain::symmetric(2, 1.5).unwrap();
        let mu = sampling::uniform_iid(&box2, 30, seed).unwrap();
        let nu = sampling::uniform_iid(&box2, 20, seed + 1).unwrap();
        let base = mu.concat(&nu).unwrap();
        let ctrl = StepControl { samples: Some(6), ..StepControl::with_dt(1e-2) };
        let map = flow_map(&b, &base, 1.0, &ctrl).unwrap();
        let mix = mu.scaled(a).unwrap().concat(&nu.scaled(c).unwrap()).unwrap();
        let phi = FnObservable::new(2, |z: &[f64]| (z[0] - 0.2 * z[1]).sin() + z[1] * z[1]);
        let lhs = map.superpose(&mix).unwrap().observe(&phi).unwrap();
        let om = map.superpose(&mu).unwrap().observe(&phi).unwrap();
        let on = map.superpose(&nu).unwrap().observe(&phi).unwrap();
        for k in 0..lhs.len() {
            prop_assert!((lhs[k] - (a * om[k] + c * on[k])).abs() <= 1e-12 * (1.0 + lhs[k].abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn independent_constructions_agree(cx in -0.5..0.5f64, cp in -0.5..0.5f64, seed in 0u64..100) {
        let b = anharmonic();
        let cloud = sampling::uniform_iid(&BoxDomain::new(vec![cx - 0.5, cp - 0.5], vec![cx + 0.5, cp + 0.5]).unwrap(), 200, seed).unwrap();
        let first = flow_map(&b, &cloud, 1.0, &StepControl { samples: Some(11), ..StepControl::with_dt(1e-3) }).unwrap();
        let second = flow_map(&b, &cloud, 1.0, &StepControl { samples: Some(21), ..StepControl::with_dt(3e-4) }).unwrap();
        let dict = TestFunctionDictionary::default_for(&BoxDomain::symmetric(2, 3.0).unwrap()).unwrap();
        let d = curve_sup_distance(&first.superpose(&cloud).unwrap(), &second.superpose(&cloud).unwrap(), &dict).unwrap();
        prop_assert!(d <= 1e-4, "sup distance {d:e}");
    }
}

#[test]
fn trajectories_satisfy_their_integral_equation() {
    let b = anharmonic();
    let ctrl = StepControl { samples: Some(201), ..StepControl::with_dt(1e-3) };
    let tr = integrate_trajectory(&b, &[0.7, -0.4], 2.0, &ctrl).unwrap();
    assert!(ode_residual(&tr, &b).unwrap() <= 1e-6);
}

#[test]
fn harmonic_trajectory_matches_the_rotation() {
    let ctrl = StepControl { samples: Some(65), ..StepControl::with_dt(1e-3) };
    let tr = integrate_trajectory(&field("harmonic"), &[1.2, 0.3], 2.0 * std::f64::consts::PI, &ctrl).unwrap();
    for (k, &t) in tr.times().iter().enumerate() {
        let (x, p) = harmonic_exact(1.2, 0.3, 1.0, t);
        let z = tr.state(k);
        assert!((z[0] - x).hypot(z[1] - p) <= 1e-10, "t = {t}");
    }
}

#[test]
fn mass_landing_on_the_singular_set_is_reported() {
    let b = make_field(&FieldSpec::new("coulomb").param("k", 1.0)).unwrap();
    let cloud = ParticleMeasure::from_points(2, &[vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.5, 0.5]).unwrap();
    let ctrl = StepControl { samples: Some(3), max_invalid: 0.6, ..StepControl::with_dt(1e-2) };
    let map = flow_map(&b, &cloud, 1.0, &ctrl).unwrap();
    assert_eq!(map.invalid_fraction(), 0.5);
    let tight = StepControl { max_invalid: 0.1, ..ctrl };
    assert!(flow_map(&b, &cloud, 1.0, &tight).is_err());
}
