// Alone in its binary: it sets a process-wide environment variable.

use rlf_core::harness::{run_experiment, ExperimentConfig, CONFIG_SNAPSHOT, MANIFEST, OUTPUT_ROOT_ENV};

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    std::env::set_var(OUTPUT_ROOT_ENV, tmp.path());
    let text = "experiment = \"oracle-consistency\"\nseed = 1\noutput_dir = \"nested/o\"\n\
                [oracle.particle_fv]\ncells = 32\n[oracle.uniqueness]\nper_axis = 8\n";
    let record = run_experiment(ExperimentConfig::from_toml(text).unwrap()).unwrap();
    let dir = tmp.path().join("nested/o");
    assert_eq!(record.output_dir, dir);
    assert!(dir.join(MANIFEST).exists() && dir.join(CONFIG_SNAPSHOT).exists());
    assert!(dir.join("uniqueness.csv").exists());
}
