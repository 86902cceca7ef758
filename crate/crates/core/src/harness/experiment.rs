//! The evaluation protocol: per run seed, offline refinement on the dataset
//! followed by evaluation episodes with online refits; seed-level means are
//! aggregated with percentile-bootstrap intervals. All methods see the same
//! (seed, episode) environment instances.

use super::metrics::{bootstrap_ci, mean_curves, MetricsReport, SeedSummary, BOOTSTRAP_RESAMPLES};
use crate::dsl::{golden, tabular_fit, EvalBudget, ModelPrograms, TabularError};
use crate::filter::FilterConfig;
use crate::grid::{
    read_state_log, read_trajectories, EnvId, GridError, Method, Trajectory,
};
use crate::par::par_map;
use crate::plan::{run_episode, run_random_episode, BeliefStep, EpisodeResult, PlannerConfig};
use crate::propose::{PromptLevel, ProposalError, Proposer, ProposerConfig};
use crate::refine::{rex_round, save_checkpoint, select_final, CandidatePool, RefinementConfig, RoundCtx};
use crate::rng::{self, tag};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    Proposal(#[from] ProposalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_episodes() -> u32 {
    3
}

fn default_offline_rounds() -> u32 {
    5
}

fn default_online_rounds() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvId,
    pub method: Method,
    #[serde(default = "default_seeds")]
    pub run_seeds: Vec<u64>,
    #[serde(default = "default_episodes")]
    pub episodes_per_seed: u32,
    pub offline_dataset: PathBuf,
    /// Privileged state log, required by the tabular baseline.
    #[serde(default)]
    pub state_log: Option<PathBuf>,
    #[serde(default)]
    pub prompt_level: PromptLevel,
    /// Offline refinement rounds J.
    #[serde(default = "default_offline_rounds")]
    pub offline_rounds: u32,
    /// Rounds per online refit trigger.
    #[serde(default = "default_online_rounds")]
    pub online_rounds: u32,
    #[serde(default)]
    pub proposer: ProposerConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub refinement: RefinementConfig,
    #[serde(default)]
    pub budget: EvalBudget,
    /// Firewall knob: scramble all latent states fed to the diagnostics
    /// sink. Induction-path outputs must be unaffected.
    #[serde(default)]
    pub poison_privileged: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, ExperimentError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, ExperimentError> {
        ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.run_seeds.is_empty() {
            return Err(ExperimentError::Config("run_seeds must be nonempty".into()));
        }
        let mut dedup = self.run_seeds.clone();
        dedup.sort_unstable();
        dedup.dedup();
        if dedup.len() != self.run_seeds.len() {
            return Err(ExperimentError::Config("run_seeds must be distinct".into()));
        }
        if self.episodes_per_seed == 0 {
            return Err(ExperimentError::Config("episodes_per_seed must be positive".into()));
        }
        if self.method == Method::Tabular && self.state_log.is_none() {
            return Err(ExperimentError::Config(
                "tabular method needs state_log (privileged data)".into(),
            ));
        }
        Ok(())
    }

    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        format!("{:x}", hasher.finalize())
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config_hash: String,
    env: &'a str,
    method: &'a str,
    run_seeds: &'a [u64],
    episodes_per_seed: u32,
    package_version: &'static str,
}

struct SeedRun {
    summary: SeedSummary,
    traces: Vec<Vec<BeliefStep>>,
    warnings: Vec<String>,
}

/// Runs the full protocol and writes `manifest.json`, `metrics.json`,
/// `metrics.csv`, `curves.csv`, plus per-seed pool checkpoints and episode
/// files under `run_dir`.
pub fn run_experiment(config: &ExperimentConfig, run_dir: &Path) -> Result<MetricsReport, ExperimentError> {
    config.validate()?;
    let dataset = read_trajectories(&config.offline_dataset)?;
    if dataset.is_empty() {
        return Err(ExperimentError::Config(format!(
            "offline dataset {} is empty",
            config.offline_dataset.display()
        )));
    }
    run_experiment_on(config, &dataset, run_dir)
}

/// Same as [`run_experiment`] with the dataset already in memory (used by
/// the sample-efficiency sweep to truncate it).
pub fn run_experiment_on(
    config: &ExperimentConfig,
    dataset: &[Trajectory],
    run_dir: &Path,
) -> Result<MetricsReport, ExperimentError> {
    std::fs::create_dir_all(run_dir)?;

    // Fit the tabular baseline once; it is deterministic in the data.
    let tabular_model = if config.method == Method::Tabular {
        let log_path = config.state_log.as_ref().expect("validated");
        let log = read_state_log(log_path)?;
        if log.is_empty() {
            return Err(ExperimentError::Config("state log is empty".into()));
        }
        Some(tabular_fit(&log)?)
    } else {
        None
    };

    let seed_runs: Vec<Result<SeedRun, String>> =
        par_map(config.filter.exec, &config.run_seeds, |&seed| {
            run_seed(config, dataset, tabular_model.as_ref(), seed, run_dir)
                .map_err(|e| format!("seed {seed}: {e}"))
        });

    let mut per_seed = Vec::new();
    let mut warnings = Vec::new();
    let mut all_traces: Vec<Vec<BeliefStep>> = Vec::new();
    for r in seed_runs {
        match r {
            Ok(run) => {
                per_seed.push(run.summary);
                warnings.extend(run.warnings);
                all_traces.extend(run.traces);
            }
            Err(e) => return Err(ExperimentError::Config(e)),
        }
    }

    let seed_rewards: Vec<f64> = per_seed.iter().map(|s| s.mean_reward).collect();
    let seed_wins: Vec<f64> = per_seed.iter().map(|s| s.win_rate).collect();
    let mean_reward = seed_rewards.iter().sum::<f64>() / seed_rewards.len() as f64;
    let win_rate = seed_wins.iter().sum::<f64>() / seed_wins.len() as f64;
    let trace_refs: Vec<&[BeliefStep]> = all_traces.iter().map(|t| t.as_slice()).collect();
    let (entropy_curve, map_accuracy_curve, mass_on_true_curve) = mean_curves(&trace_refs);

    let report = MetricsReport {
        env: config.env.name().to_string(),
        method: config.method.name().to_string(),
        per_seed,
        mean_reward,
        reward_ci: bootstrap_ci(&seed_rewards, BOOTSTRAP_RESAMPLES, 0),
        win_rate,
        win_ci: bootstrap_ci(&seed_wins, BOOTSTRAP_RESAMPLES, 1),
        entropy_curve,
        map_accuracy_curve,
        mass_on_true_curve,
        warnings,
    };

    let manifest = Manifest {
        config_hash: config.config_hash(),
        env: config.env.name(),
        method: config.method.name(),
        run_seeds: &config.run_seeds,
        episodes_per_seed: config.episodes_per_seed,
        package_version: env!("CARGO_PKG_VERSION"),
    };
    std::fs::write(run_dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest).unwrap())?;
    std::fs::write(run_dir.join("metrics.json"), serde_json::to_vec_pretty(&report).unwrap())?;
    super::plots::write_metrics_csv(&report, &run_dir.join("metrics.csv"))?;
    super::plots::write_curves_csv(&report, &run_dir.join("curves.csv"))?;
    Ok(report)
}

fn run_seed(
    config: &ExperimentConfig,
    dataset: &[Trajectory],
    tabular_model: Option<&ModelPrograms>,
    seed: u64,
    run_dir: &Path,
) -> Result<SeedRun, ExperimentError> {
    let seed_dir = run_dir.join(format!("seed_{seed}"));
    std::fs::create_dir_all(&seed_dir)?;
    let mut warnings = Vec::new();
    let mut local_dataset: Vec<Trajectory> = dataset.to_vec();

    // Offline refinement (induced method only).
    let mut pool = CandidatePool::new();
    let mut selected: Option<ModelPrograms> = None;
    let mut best_pool_score = None;
    match config.method {
        Method::Induced => {
            let proposer = Proposer::build(&config.proposer, config.env)?;
            for _ in 0..config.offline_rounds {
                let ctx = RoundCtx {
                    proposer: &proposer,
                    env: config.env,
                    level: config.prompt_level,
                    dataset: &local_dataset,
                    filter: &config.filter,
                    budget: &config.budget,
                    config: &config.refinement,
                    run_seed: seed,
                };
                let report = rex_round(&mut pool, &ctx);
                warnings.extend(report.warnings);
                save_checkpoint(&pool, &seed_dir.join(format!("pool_round_{:03}.json", report.round)))
                    .map_err(|e| ExperimentError::Config(e.to_string()))?;
            }
            best_pool_score = pool.best_score();
            let mut rng = rng::derive(seed, &[tag::SELECT, 0]);
            match select_final(&pool, config.refinement.selection_temperature, &mut rng) {
                Ok(id) => {
                    selected = pool.get(id).and_then(|n| n.model.programs.clone());
                }
                Err(e) => warnings.push(format!("seed {seed}: {e}; falling back to random policy")),
            }
        }
        Method::GroundTruth => selected = Some(golden::ground_truth(config.env)),
        Method::Tabular => selected = tabular_model.cloned(),
        Method::Random => {}
    }

    // Evaluation episodes with deterministic per-episode reseeding; every
    // method sees the same (seed, episode) environment instance.
    let mut rewards = Vec::new();
    let mut wins = Vec::new();
    let mut traces = Vec::new();
    let mut episodes = Vec::new();
    for ep in 0..config.episodes_per_seed as u64 {
        let episode_seed = rng::mix(seed, &[tag::EPISODE, ep]);
        let result: EpisodeResult = match (&selected, config.method) {
            (_, Method::Random) | (None, _) => run_random_episode(config.env, episode_seed),
            (Some(model), _) => run_episode(
                config.env,
                model,
                &config.filter,
                &config.planner,
                &config.budget,
                episode_seed,
                config.poison_privileged,
            ),
        };
        rewards.push(result.reward);
        wins.push(result.win);
        traces.push(result.belief_trace);
        episodes.push(result.trajectory.clone());

        // Online refit: append the fresh trajectory, rescore, one round,
        // reselect.
        if config.method == Method::Induced {
            local_dataset.push(result.trajectory);
            let proposer = Proposer::build(&config.proposer, config.env)?;
            for _ in 0..config.online_rounds {
                let ctx = RoundCtx {
                    proposer: &proposer,
                    env: config.env,
                    level: config.prompt_level,
                    dataset: &local_dataset,
                    filter: &config.filter,
                    budget: &config.budget,
                    config: &config.refinement,
                    run_seed: rng::mix(seed, &[tag::EPISODE, ep, 1]),
                };
                match crate::refine::online_update(&mut pool, &ctx) {
                    Ok((id, round_report)) => {
                        warnings.extend(round_report.warnings);
                        if let Some(p) = pool.get(id).and_then(|n| n.model.programs.clone()) {
                            selected = Some(p);
                        }
                    }
                    Err(e) => {
                        warnings.push(format!("seed {seed} episode {ep}: {e}; keeping prior model"));
                    }
                }
                save_checkpoint(&pool, &seed_dir.join(format!("pool_round_{:03}.json", pool.round_index - 1)))
                    .map_err(|e| ExperimentError::Config(e.to_string()))?;
            }
            best_pool_score = pool.best_score().or(best_pool_score);
        }
    }
    crate::grid::write_trajectories(&seed_dir.join("episodes.jsonl"), &episodes)?;

    let mean_reward = rewards.iter().sum::<f64>() / rewards.len() as f64;
    let win_rate = wins.iter().filter(|w| **w).count() as f64 / wins.len() as f64;
    Ok(SeedRun {
        summary: SeedSummary {
            seed,
            mean_reward,
            win_rate,
            episode_rewards: rewards,
            best_pool_score,
        },
        traces,
        warnings,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub label: String,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// Reward versus offline dataset size: runs the full protocol on the first
/// `n` trajectories for each requested `n`.
pub fn sample_efficiency_sweep(
    config: &ExperimentConfig,
    n_values: &[usize],
    run_dir: &Path,
) -> Result<SweepReport, ExperimentError> {
    if n_values.is_empty() {
        return Err(ExperimentError::Config("sweep needs at least one dataset size".into()));
    }
    let dataset = read_trajectories(&config.offline_dataset)?;
    let mut rows = Vec::new();
    for &n in n_values {
        if n == 0 {
            return Err(ExperimentError::Config("dataset size 0 is not runnable".into()));
        }
        if n > dataset.len() {
            return Err(ExperimentError::Config(format!(
                "sweep needs {n} trajectories, dataset has {}",
                dataset.len()
            )));
        }
        let sub = &dataset[..n];
        let dir = run_dir.join(format!("n_{n:03}"));
        let report = run_experiment_on(config, sub, &dir)?;
        rows.push(SweepRow { x: n as f64, label: format!("n={n}"), report });
    }
    let sweep = SweepReport { rows };
    super::plots::write_sweep(&sweep, "trajectories", run_dir)?;
    Ok(sweep)
}

/// Planner entropy-coefficient sweep, one full protocol run per value.
pub fn entropy_sweep(
    config: &ExperimentConfig,
    values: &[f64],
    run_dir: &Path,
) -> Result<SweepReport, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::Config("sweep needs at least one coefficient".into()));
    }
    let dataset = read_trajectories(&config.offline_dataset)?;
    let mut rows = Vec::new();
    for &v in values {
        let mut cfg = config.clone();
        cfg.planner.entropy_coefficient = v;
        let dir = run_dir.join(format!("entropy_{v}"));
        let report = run_experiment_on(&cfg, &dataset, &dir)?;
        rows.push(SweepRow { x: v, label: format!("coef={v}"), report });
    }
    let sweep = SweepReport { rows };
    super::plots::write_sweep(&sweep, "entropy coefficient", run_dir)?;
    Ok(sweep)
}
