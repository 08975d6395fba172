use proptest::prelude::*;
use rlf_core::measures::{
    check_regular, default_bandwidth, dirac_ensemble_from_samples, sampling, weak_distance, BoxDomain,
    EnsembleMember, FnObservable, MeasureEnsemble, ParticleMeasure, TestFunctionDictionary, DEFAULT_SLACK,
};

fn cloud(max: usize) -> impl Strategy<Value = ParticleMeasure> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64, 0.01..1.0f64), 1..max).prop_map(|pts| {
        let coords = pts.iter().flat_map(|(x, y, _)| [*x, *y]).collect();
        let weights = pts.iter().map(|p| p.2).collect();
        ParticleMeasure::new(2, coords, weights).unwrap()
    })
}

fn dictionary() -> TestFunctionDictionary {
    TestFunctionDictionary::default_for(&BoxDomain::symmetric(2, 2.5).unwrap()).unwrap()
}

fn shear(x: &[f64], out: &mut [f64]) -> Result<(), String> {
    out[0] = x[0] + 0.3 * x[1].sin();
    out[1] = x[1] - 0.2 * x[0] * x[0];
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pushforward_keeps_mass(mu in cloud(40)) {
        let img = mu.pushforward(shear).unwrap();
        prop_assert_eq!(img.len(), mu.len());
        prop_assert!((img.total_mass() - mu.total_mass()).abs() <= 1e-15 * mu.len() as f64);
    }

    #[test]
    fn change_of_variables(mu in cloud(40)) {
        let phi = |x: &[f64]| (x[0] - 0.3).cos() * (1.0 + x[1] * x[1]).ln();
        let img = mu.pushforward(shear).unwrap();
        let lhs = img.integrate(phi);
        let rhs = mu.integrate(|x| {
            let mut y = [0.0; 2];
            shear(x, &mut y).unwrap();
            phi(&y)
        });
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn expectation_is_linear(a in cloud(12), b in cloud(12), c in cloud(12), s in 0.05..0.95f64) {
        let e1 = MeasureEnsemble::new(2, vec![
            EnsembleMember { weight: 0.4, measure: a.normalized().unwrap() },
            EnsembleMember { weight: 0.6, measure: b.normalized().unwrap() },
        ]).unwrap();
        let e2 = MeasureEnsemble::new(2, vec![EnsembleMember { weight: 1.0, measure: c.normalized().unwrap() }]).unwrap();
        let mix = e1.combine(s, &e2, 1.0 - s).unwrap();
        let phi = FnObservable::new(2, |x: &[f64]| x[0] * x[0] - x[1] + 0.5);
        let lhs = mix.expectation().unwrap().integrate_test(&phi).unwrap();
        let rhs = s * e1.expectation().unwrap().integrate_test(&phi).unwrap()
            + (1.0 - s) * e2.expectation().unwrap().integrate_test(&phi).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn weak_distance_is_a_bounded_metric(a in cloud(15), b in cloud(15), c in cloud(15)) {
        let d = dictionary();
        let (a, b, c) = (a.normalized().unwrap(), b.normalized().unwrap(), c.normalized().unwrap());
        let ab = weak_distance(&a, &b, &d).unwrap();
        let ba = weak_distance(&b, &a, &d).unwrap();
        let bc = weak_distance(&b, &c, &d).unwrap();
        let ac = weak_distance(&a, &c, &d).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() <= 1e-15);
        prop_assert!(ac <= ab + bc + 1e-14);
        prop_assert_eq!(weak_distance(&a, &a, &d).unwrap(), 0.0);
    }

    #[test]
    fn dictionary_separates_distinct_diracs(
        x in (-2.0..2.0f64, -2.0..2.0f64),
        step in 0.01..1.0f64,
        angle in 0.0..std::f64::consts::TAU,
    ) {
        let y = (x.0 + step * angle.cos(), x.1 + step * angle.sin());
        let d = weak_distance(&ParticleMeasure::dirac(&[x.0, x.1]), &ParticleMeasure::dirac(&[y.0, y.1]), &dictionary()).unwrap();
        prop_assert!(d > 0.0);
    }
}

#[test]
fn dirac_ensemble_of_a_uniform_cloud_is_regular() {
    let unit = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    // lattice of Diracs: the kernel sum is flat in the interior once h exceeds the spacing
    let samples = sampling::grid_quadrature(&unit, &[100, 100], |_| 1.0).unwrap();
    let h = default_bandwidth(&samples).unwrap();
    assert!((h - 0.02).abs() < 1e-9);
    let nu = dirac_ensemble_from_samples(&samples).unwrap();
    let r = check_regular(&nu, 1.0, &unit.padded(0.2), &[60, 60], h, DEFAULT_SLACK).unwrap();
    assert!(r.pass, "max density {}", r.max_density);
}

#[test]
fn atomic_ensemble_fails_the_bound() {
    let unit = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let atom = MeasureEnsemble::new(
        2,
        vec![EnsembleMember { weight: 1.0, measure: ParticleMeasure::dirac(&[0.5, 0.5]) }],
    )
    .unwrap();
    let r = check_regular(&atom, 1.0, &unit, &[60, 60], 0.02, DEFAULT_SLACK).unwrap();
    assert!(!r.pass);
    // the whole mass lands in a few cells of area 1/3600
    assert!(r.max_density > 100.0);
}
