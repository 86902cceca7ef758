//! End-to-end harness runs: every method through the full protocol on small
//! configs, dataset sweeps, and the run-directory artifact layout.

use beliefworld::grid::{EnvId, Method};
use beliefworld::harness::{
    collect_offline_dataset, load_metrics, run_experiment, sample_efficiency_sweep,
    ExperimentConfig,
};
use beliefworld::propose::ProposerConfig;
use std::path::Path;

fn small_config(env: EnvId, method: Method, dataset: &Path, states: Option<&Path>) -> ExperimentConfig {
    let toml_text = format!(
        "env = \"{env}\"\nmethod = \"random\"\noffline_dataset = \"{}\"\n",
        dataset.display()
    );
    let mut cfg = ExperimentConfig::from_toml(&toml_text).unwrap();
    cfg.method = method;
    cfg.run_seeds = vec![0, 1];
    cfg.episodes_per_seed = 1;
    cfg.offline_rounds = 2;
    cfg.refinement.candidates_per_round = 3;
    cfg.state_log = states.map(Path::to_path_buf);
    cfg.proposer = ProposerConfig::default();
    cfg
}

#[test]
fn all_methods_run_the_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let env = EnvId::Empty6;
    let data = dir.path().join("demo.jsonl");
    let states = dir.path().join("demo.states.jsonl");
    collect_offline_dataset(env, 6, 0, &data, Some(&states)).unwrap();

    for method in [Method::GroundTruth, Method::Random, Method::Tabular, Method::Induced] {
        let run_dir = dir.path().join(method.name());
        let cfg = small_config(env, method, &data, Some(&states));
        let report = run_experiment(&cfg, &run_dir).unwrap();
        assert_eq!(report.per_seed.len(), 2, "{method:?}");
        assert!(run_dir.join("manifest.json").exists());
        assert!(run_dir.join("metrics.json").exists());
        assert!(run_dir.join("metrics.csv").exists());
        assert!(run_dir.join("curves.csv").exists());
        let loaded = load_metrics(&run_dir.join("metrics.json")).unwrap();
        assert_eq!(loaded, report);
        match method {
            Method::GroundTruth => {
                assert_eq!(report.win_rate, 1.0, "ground truth must win deterministic empty");
            }
            Method::Induced => {
                // Pool checkpoints written each round (2 offline + 1 online).
                for round in 0..3 {
                    assert!(
                        run_dir.join("seed_0").join(format!("pool_round_{round:03}.json")).exists(),
                        "round {round} checkpoint"
                    );
                }
                assert!(report.win_rate > 0.0);
            }
            _ => {}
        }
        assert!(run_dir.join("seed_0/episodes.jsonl").exists());
    }
}

#[test]
fn tabular_method_requires_state_log() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    collect_offline_dataset(EnvId::Empty6, 3, 0, &data, None).unwrap();
    let cfg = small_config(EnvId::Empty6, Method::Tabular, &data, None);
    assert!(cfg.validate().is_err());
}

#[test]
fn missing_dataset_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        EnvId::Empty6,
        Method::Random,
        &dir.path().join("nope.jsonl"),
        None,
    );
    assert!(run_experiment(&cfg, &dir.path().join("out")).is_err());
}

#[test]
fn sweep_has_one_row_per_n_and_rejects_zero() {
    let dir = tempfile::tempdir().unwrap();
    let env = EnvId::Empty6;
    let data = dir.path().join("demo.jsonl");
    collect_offline_dataset(env, 6, 1, &data, None).unwrap();
    let mut cfg = small_config(env, Method::Induced, &data, None);
    cfg.run_seeds = vec![0];

    let sweep = sample_efficiency_sweep(&cfg, &[1, 3, 6], &dir.path().join("sweep")).unwrap();
    assert_eq!(sweep.rows.len(), 3);
    assert!(dir.path().join("sweep/sweep.csv").exists());
    assert!(dir.path().join("sweep/reward_vs_x.svg").exists());

    let err = sample_efficiency_sweep(&cfg, &[0], &dir.path().join("sweep0"));
    assert!(err.is_err(), "n = 0 must be rejected");
    let err = sample_efficiency_sweep(&cfg, &[99], &dir.path().join("sweep99"));
    assert!(err.is_err(), "n beyond the dataset must be rejected");
}

#[test]
fn config_toml_round_trip_and_defaults() {
    let text = "env = \"lava-10x10\"\nmethod = \"induced\"\noffline_dataset = \"data/lava.jsonl\"\n";
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    assert_eq!(cfg.run_seeds, (0..10).collect::<Vec<u64>>());
    assert_eq!(cfg.episodes_per_seed, 3);
    assert_eq!(cfg.offline_rounds, 5);
    assert_eq!(cfg.online_rounds, 1);
    assert_eq!(cfg.refinement.candidates_per_round, 5);
    assert_eq!(cfg.refinement.c_ucb, 1.0);
    assert_eq!(cfg.refinement.selection_temperature, 0.1);
    assert_eq!(cfg.filter.particles, 10);
    assert_eq!(cfg.filter.kernel.kappa, 0.2);
    assert_eq!(cfg.planner.expansion_budget, 5_000);
    assert_eq!(cfg.planner.entropy_coefficient, 1.0);
    assert_eq!(cfg.budget.max_steps_per_call, 50_000);

    // Duplicate seeds rejected.
    let dup = format!("{text}run_seeds = [1, 1]\n");
    assert!(ExperimentConfig::from_toml(&dup).is_err());
    // Unknown env rejected.
    assert!(ExperimentConfig::from_toml(
        "env = \"maze-3x3\"\nmethod = \"random\"\noffline_dataset = \"x\"\n"
    )
    .is_err());
}
