use cascade_bandits::config::EnvKind;
use cascade_bandits::ExperimentConfig;
use proptest::prelude::*;

fn set(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn defaults() {
    let cfg = ExperimentConfig::default();
    assert_eq!((cfg.num_items, cfg.list_len, cfg.horizon), (30, 3, 10_000));
    assert_eq!(cfg.lambda, 1e-4);
    assert_eq!(cfg.replications, 100);
    assert_eq!(cfg.log_every, 100);
    assert_eq!(cfg.env, EnvKind::Bernoulli);
    assert_eq!(cfg.sweep, (0..=8).collect::<Vec<_>>());
    assert_eq!(cfg.sweep_horizon, 1000);
}

#[test]
fn file_values_and_overrides() {
    let text = "L = 10\nK = 2\nT = 500\nalgorithms = [\"gts\", \"cascade-ucb1\"]\nenv = \"linear\"\n";
    let cfg = ExperimentConfig::from_toml_str(text, &set(&["T=50", "seed=7", "algorithms=[\"lints\"]"])).unwrap();
    assert_eq!((cfg.num_items, cfg.list_len, cfg.horizon, cfg.seed), (10, 2, 50, 7));
    assert_eq!(cfg.env, EnvKind::Linear);
    assert_eq!(cfg.algorithms, vec!["lints".to_string()]);
    // a bare word is a string
    let cfg = ExperimentConfig::with_overrides(&set(&["env=logistic", "lambda=0.5"])).unwrap();
    assert_eq!(cfg.env, EnvKind::Logistic);
    assert_eq!(cfg.lambda, 0.5);
}

#[test]
fn invalid_configs_are_rejected() {
    for bad in [
        vec!["K=40"],
        vec!["T=0"],
        vec!["no_such_key=1"],
        vec!["algorithms=[\"nope\"]"],
        vec!["env=instances"],
        vec!["delta=1.5"],
        vec!["sweep=[0, 9]"],
        vec!["T"],
    ] {
        assert!(ExperimentConfig::with_overrides(&set(&bad)).is_err(), "{bad:?}");
    }
    assert!(ExperimentConfig::from_toml_str("[table]\nx = 1\n", &[]).is_err());
}

#[test]
fn hash_ignores_output_locations_and_threads() {
    let base = ExperimentConfig::default();
    let mut other = base.clone();
    other.output = "elsewhere/results.csv".into();
    other.svg = Some("plot.svg".into());
    other.threads = 8;
    other.strict = true;
    assert_eq!(base.hash(), other.hash());
    assert_eq!(base.hash().len(), 64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hash_changes_iff_a_semantic_field_changes(
        horizon in prop::sample::select(vec![100u64, 10_000]),
        seed in prop::sample::select(vec![1u64, 2]),
        lambda in prop::sample::select(vec![1e-4, 1.0]),
        reps in prop::sample::select(vec![10usize, 100]),
        noise_var in prop::sample::select(vec![0.25, 1.0]),
        algs in prop::sample::select(vec![vec!["gts"], vec!["gts", "ts-beta"]]),
    ) {
        let base = ExperimentConfig::default();
        let mut cfg = base.clone();
        cfg.horizon = horizon;
        cfg.seed = seed;
        cfg.lambda = lambda;
        cfg.replications = reps;
        cfg.noise_var = noise_var;
        cfg.algorithms = algs.iter().map(|s| s.to_string()).collect();
        let same = cfg == base;
        prop_assert_eq!(cfg.hash() == base.hash(), same);
    }
}
