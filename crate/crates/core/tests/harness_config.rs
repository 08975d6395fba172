use std::path::{Path, PathBuf};

use proptest::prelude::*;
use rlf_core::harness::{ExperimentConfig, Tolerances, EXPERIMENTS};

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn tolerances() -> impl Strategy<Value = Tolerances> {
    (1e-3..1.0f64, 1.0..3.0f64, 1e-9..1e-3f64, 0.1..0.9f64).prop_map(|(fv_l1, fv_refinement, uniqueness, d_ratio)| {
        Tolerances { fv_l1, fv_refinement, uniqueness, d_ratio, ..Tolerances::default() }
    })
}

proptest! {
    #[test]
    fn config_survives_a_toml_round_trip(
        which in 0usize..EXPERIMENTS.len(),
        seed in any::<u64>(),
        tol in tolerances(),
        out in prop::option::of("[a-z]{1,8}"),
    ) {
        let mut c = ExperimentConfig::from_toml(&format!("experiment = \"{}\"\nseed = 0\n", EXPERIMENTS[which].0)).unwrap();
        c.seed = seed;
        c.tolerances = tol;
        c.output_dir = out.map(PathBuf::from);
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }
}

#[test]
fn shipped_configs_resolve_and_round_trip() {
    for (file, experiment) in [
        ("rlf_check.toml", "rlf-check"),
        ("oracle.toml", "oracle-consistency"),
        ("semiclassical.toml", "semiclassical"),
        ("alpha1.toml", "alpha1"),
        ("stability.toml", "stability-hypotheses"),
    ] {
        let c = ExperimentConfig::load(&shipped(file)).unwrap();
        assert_eq!(c.experiment, experiment);
        let resolved = c.resolve().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&resolved.to_toml().unwrap()).unwrap(), resolved, "{file}");
    }
}

#[test]
fn seed_is_mandatory_and_unknown_keys_are_rejected() {
    assert!(ExperimentConfig::from_toml("experiment = \"rlf-check\"\n").is_err());
    assert!(ExperimentConfig::from_toml("experiment = \"rlf-check\"\nseed = 1\nspeed = 2\n").is_err());
}

#[test]
fn sections_required_by_the_experiment_must_be_present() {
    let c = ExperimentConfig::from_toml("experiment = \"semiclassical\"\nseed = 1\n").unwrap();
    assert!(c.resolve().is_err());
    let c = ExperimentConfig::from_toml("experiment = \"oracle-consistency\"\nseed = 1\n").unwrap();
    assert!(c.resolve().unwrap().oracle.is_some());
}

#[test]
fn output_paths_resolve_against_the_root() {
    let mut c = ExperimentConfig::from_toml("experiment = \"alpha1\"\nseed = 1\n").unwrap();
    assert_eq!(c.output_path_under(Path::new("/r")), PathBuf::from("/r/alpha1"));
    c.output_dir = Some("x/y".into());
    assert_eq!(c.output_path_under(Path::new("/r")), PathBuf::from("/r/x/y"));
    c.output_dir = Some("/abs".into());
    assert_eq!(c.output_path_under(Path::new("/r")), PathBuf::from("/abs"));
}
