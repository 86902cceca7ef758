//! Command-line interface: collect, refine, eval, sweep, plot, replay.

use super::experiment::{entropy_sweep, run_experiment, sample_efficiency_sweep, ExperimentConfig};
use super::plots::emit_plots;
use crate::grid::{
    read_trajectories, render_episode, reset, step, Action, EnvId, GridState, Method, ObsRecord,
};
use super::plots::load_metrics;
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "beliefworld", version, about = "POMDP world-model induction and belief-space planning in gridworlds")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collect an offline demonstration dataset.
    Collect {
        #[arg(long)]
        env: EnvId,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the privileged state log (for the tabular baseline).
        #[arg(long)]
        states: Option<PathBuf>,
    },
    /// Offline refinement only: run the proposal loop and report the
    /// selected model, writing pool checkpoints each round.
    Refine {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "runs/refine")]
        run_dir: PathBuf,
    },
    /// Full protocol: refinement (per method), evaluation episodes with
    /// online refits, metrics with bootstrap CIs, plots.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "runs/eval")]
        run_dir: PathBuf,
    },
    /// Sample-efficiency sweep over offline dataset sizes, or a planner
    /// entropy-coefficient sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "runs/sweep")]
        run_dir: PathBuf,
        /// Dataset sizes, e.g. --n-values 1,5,10
        #[arg(long, value_delimiter = ',')]
        n_values: Vec<usize>,
        /// Planner entropy coefficients, e.g. --entropy-values 0,0.5,1
        #[arg(long, value_delimiter = ',')]
        entropy_values: Vec<f64>,
    },
    /// Render figures from saved metrics.json files.
    Plot {
        /// One or more metrics.json paths.
        #[arg(long, required = true, num_args = 1..)]
        metrics: Vec<PathBuf>,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// Verify a recorded trajectory file replays bit-exactly; optionally
    /// render per-step frames.
    Replay {
        #[arg(long)]
        trajectories: PathBuf,
        /// Render frames for this episode index.
        #[arg(long)]
        episode: Option<usize>,
        #[arg(long)]
        render: Option<PathBuf>,
    },
}

pub fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Collect { env, n, seed, out, states } => {
            super::collect_offline_dataset(env, n, seed, &out, states.as_deref())?;
            println!("wrote {n} trajectories to {}", out.display());
            if let Some(s) = states {
                println!("wrote privileged state log to {}", s.display());
            }
        }
        Command::Refine { config, run_dir } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if cfg.method != Method::Induced {
                bail!("refine only applies to method = \"induced\"");
            }
            // Refinement without evaluation: run zero episodes.
            cfg.episodes_per_seed = 1;
            cfg.run_seeds.truncate(1);
            let report = run_experiment(&cfg, &run_dir)?;
            println!(
                "refined on {}: best pool score {:?}",
                cfg.env,
                report.per_seed[0].best_pool_score
            );
            println!("checkpoints under {}", run_dir.display());
        }
        Command::Eval { config, run_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment(&cfg, &run_dir)?;
            emit_plots(&[&report], &run_dir.join("plots"))?;
            println!(
                "{} / {}: mean reward {:.4} [{:.4}, {:.4}], win rate {:.0}%",
                report.env,
                report.method,
                report.mean_reward,
                report.reward_ci.0,
                report.reward_ci.1,
                report.win_rate * 100.0
            );
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("artifacts under {}", run_dir.display());
        }
        Command::Sweep { config, run_dir, n_values, entropy_values } => {
            let cfg = ExperimentConfig::load(&config)?;
            if n_values.is_empty() && entropy_values.is_empty() {
                bail!("pass --n-values and/or --entropy-values");
            }
            if !n_values.is_empty() {
                let sweep = sample_efficiency_sweep(&cfg, &n_values, &run_dir.join("by_n"))?;
                for row in &sweep.rows {
                    println!("{}: mean reward {:.4}", row.label, row.report.mean_reward);
                }
            }
            if !entropy_values.is_empty() {
                let sweep = entropy_sweep(&cfg, &entropy_values, &run_dir.join("by_entropy"))?;
                for row in &sweep.rows {
                    println!("{}: mean reward {:.4}", row.label, row.report.mean_reward);
                }
            }
        }
        Command::Plot { metrics, out } => {
            let reports: Vec<_> = metrics
                .iter()
                .map(|p| load_metrics(p).with_context(|| format!("reading {}", p.display())))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&super::MetricsReport> = reports.iter().collect();
            let files = emit_plots(&refs, &out)?;
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Replay { trajectories, episode, render } => {
            let trajs = read_trajectories(&trajectories)?;
            let mut verified = 0usize;
            for (i, traj) in trajs.iter().enumerate() {
                let env: EnvId = traj.env_id.parse()?;
                let (mut state, obs0) = reset(env, traj.episode_seed);
                if ObsRecord::from(&obs0) != traj.first_obs {
                    bail!("episode {i}: leading observation mismatch");
                }
                let mut states: Vec<GridState> = vec![state.clone()];
                for (t, st) in traj.steps.iter().enumerate() {
                    let action = Action::from_index(st.action)
                        .with_context(|| format!("episode {i} step {t}: bad action"))?;
                    let (next, obs, reward, done) = step(&state, action)?;
                    if ObsRecord::from(&obs) != st.obs || reward != st.reward || done != st.done {
                        bail!("episode {i} step {t}: replay diverged");
                    }
                    states.push(next.clone());
                    state = next;
                }
                verified += 1;
                if episode == Some(i) {
                    if let Some(dir) = &render {
                        let files = render_episode(traj, &states, dir)?;
                        println!("episode {i}: rendered {} frames to {}", files.len(), dir.display());
                    }
                }
            }
            println!("replayed {verified}/{} episodes bit-exactly", trajs.len());
        }
    }
    Ok(())
}
