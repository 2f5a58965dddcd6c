use dgff::harness::config::ExperimentConfig;
use dgff::harness::experiment::run_experiment;
use dgff::Error;

fn config(name: &str, dir: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        experiment: name.into(),
        sizes: vec![8, 16],
        reps: 20,
        depth: 3,
        seed: 11,
        out_dir: dir.to_path_buf(),
        ..Default::default()
    }
}

#[test]
fn experiments_are_reproducible() {
    let base = std::env::temp_dir().join(format!("dgff-exp-{}", std::process::id()));
    for name in ["levelset-exponent", "max-stats", "dekking-host", "brw-max", "chaos-mass"] {
        let (a, b) = (base.join(format!("{name}-a")), base.join(format!("{name}-b")));
        let ra = run_experiment(&config(name, &a)).unwrap();
        let rb = run_experiment(&config(name, &b)).unwrap();
        assert_eq!(ra.content_hash, rb.content_hash, "{name}");
        for f in [format!("{name}.csv"), format!("{name}.json")] {
            assert_eq!(std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)).unwrap());
        }
        let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["schema_version"], 1);
        assert_eq!(manifest["content_hash"], ra.content_hash.as_str());
        assert_eq!(manifest["config"]["seed"], 11);
        let mut other = config(name, &a);
        other.seed = 12;
        assert_ne!(run_experiment(&other).unwrap().content_hash, ra.content_hash, "{name}");
    }
    std::fs::remove_dir_all(&base).ok();
}

#[test]
fn exit_exponent_experiment_runs() {
    let dir = std::env::temp_dir().join(format!("dgff-exit-{}", std::process::id()));
    let mut c = config("exit-exponent", &dir);
    c.sizes = vec![4, 8];
    c.reps = 3;
    c.beta = 0.3;
    let out = run_experiment(&c).unwrap();
    assert!(out.summary["fit"]["slope"].as_f64().unwrap() > 1.0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_experiment_is_rejected() {
    let c = config("nope", &std::env::temp_dir());
    assert!(matches!(run_experiment(&c), Err(Error::Validation(_))));
    let mut c = config("max-stats", &std::env::temp_dir());
    c.reps = 0;
    assert!(run_experiment(&c).is_err());
}
