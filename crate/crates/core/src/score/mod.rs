//! Belief-based model scoring, failure diagnostics, and committee
//! disagreement signals for refinement prompts.

mod diagnostics;
mod qbc;

pub use diagnostics::{extract_diagnostics, DiagnosticsBundle, RewardMismatch, WorstSegment};
pub use qbc::{qbc_contexts, vote_entropy, DisagreementContext};

use crate::dsl::{EvalBudget, ModelEval, ModelPrograms, ModelScore, ObsCodes};
use crate::filter::{FilterConfig, FilterError, FilterRun, StepTrace};
use crate::grid::Trajectory;
use crate::rng::{self, tag};
use serde::{Deserialize, Serialize};

/// Per-trajectory filter trace: one [`StepTrace`] per scored step.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct TrajectoryTrace {
    pub steps: Vec<StepTrace>,
    /// Realized observations o_1..o_H as compared against predictions.
    pub observations: Vec<ObsCodes>,
    pub error: Option<ExecErrorAt>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExecErrorAt {
    pub trajectory: usize,
    /// Step index within the trajectory; step 0 is the first transition.
    pub step: usize,
    pub message: String,
}

/// Result of scoring one candidate on a dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreReport {
    pub total_score: ModelScore,
    /// Per-trajectory, per-step expected log kernel likelihoods.
    pub per_trajectory: Vec<Vec<f64>>,
    /// Expected summed observation distance under the same beliefs; the
    /// score equals -energy/kappa.
    pub energy: f64,
    pub execution_errors: Vec<ExecErrorAt>,
    pub traces: Vec<TrajectoryTrace>,
}

impl ScoreReport {
    pub fn is_valid(&self) -> bool {
        matches!(self.total_score, ModelScore::Valid(_))
    }
}

/// Runs the particle filter over every trajectory and sums the expected log
/// kernel likelihood of the realized observations under the model's own
/// filtered beliefs. The leading observation has no prediction to compare
/// against and is never read. Any program execution error marks the report
/// invalid; remaining trajectories still run so diagnostics stay rich.
pub fn score_model(
    model: &ModelPrograms,
    dataset: &[Trajectory],
    config: &FilterConfig,
    budget: &EvalBudget,
    seed: u64,
) -> ScoreReport {
    assert!(!dataset.is_empty(), "scoring needs a nonempty dataset");
    // The score is observation-only by definition; termination evidence is
    // a planning-belief feature and must never leak in here.
    let mut config = *config;
    config.condition_on_termination = false;
    let config = &config;
    let traces = crate::par::par_map_indexed(config.exec, dataset.len(), |idx| {
        score_one(model, &dataset[idx], idx, config, budget, seed)
    });

    let mut per_trajectory = Vec::with_capacity(traces.len());
    let mut energy = 0.0;
    let mut total = 0.0;
    let mut errors = Vec::new();
    for trace in &traces {
        let scores: Vec<f64> = trace.steps.iter().map(|s| s.step_score).collect();
        for s in &trace.steps {
            energy += s.expected_distance;
            total += s.step_score;
        }
        per_trajectory.push(scores);
        if let Some(e) = &trace.error {
            errors.push(e.clone());
        }
    }
    let total_score = if errors.is_empty() { ModelScore::Valid(total) } else { ModelScore::Invalid };
    ScoreReport { total_score, per_trajectory, energy, execution_errors: errors, traces }
}

fn score_one(
    model: &ModelPrograms,
    traj: &Trajectory,
    idx: usize,
    config: &FilterConfig,
    budget: &EvalBudget,
    seed: u64,
) -> TrajectoryTrace {
    let mut rng = rng::derive(seed, &[tag::TRAJECTORY, idx as u64]);
    let mut out = TrajectoryTrace::default();
    let eval = ModelEval::new(model, *budget);
    let mut run = match FilterRun::new(eval, *config, &mut rng) {
        Ok(r) => r,
        Err(e) => {
            out.error = Some(ExecErrorAt { trajectory: idx, step: 0, message: e.to_string() });
            return out;
        }
    };
    for (t, step) in traj.steps.iter().enumerate() {
        let obs = match step.obs.decode() {
            Ok(o) => ObsCodes::from(&o),
            Err(e) => {
                out.error = Some(ExecErrorAt { trajectory: idx, step: t, message: e.to_string() });
                return out;
            }
        };
        match run.step(step.action, &obs, step.done, &mut rng) {
            Ok(trace) => {
                out.observations.push(obs);
                out.steps.push(trace);
            }
            Err(FilterError::Exec(e)) => {
                out.error = Some(ExecErrorAt { trajectory: idx, step: t, message: e.to_string() });
                return out;
            }
            Err(other) => {
                out.error = Some(ExecErrorAt { trajectory: idx, step: t, message: other.to_string() });
                return out;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::golden;
    use crate::grid::{reset, step, Action, EnvId, Outcome, TrajStep};
    use crate::par::ExecMode;
    use rand::Rng;

    pub(crate) fn demo_trajectories(env: EnvId, n: usize, seed: u64) -> Vec<Trajectory> {
        let mut out = Vec::new();
        for e in 0..n as u64 {
            let ep_seed = seed.wrapping_add(e);
            let mut stream = rng::derive(ep_seed, &[99]);
            let (mut s, o0) = reset(env, ep_seed);
            let mut steps = Vec::new();
            let mut outcome = Outcome::Timeout;
            for _ in 0..30 {
                if s.terminated || s.step_count >= s.max_steps {
                    break;
                }
                let actions = env.actions();
                let a = actions[stream.gen_range(0..actions.len())];
                let (next, obs, r, d) = step(&s, a).unwrap();
                steps.push(TrajStep { action: a as u8, reward: r, done: d, obs: (&obs).into() });
                s = next;
                if d {
                    outcome = if r > 0.0 { Outcome::Success } else { Outcome::Failure };
                    break;
                }
            }
            out.push(Trajectory::new(env.name(), ep_seed, outcome, &o0, steps));
        }
        out
    }

    #[test]
    fn ground_truth_scores_zero_on_deterministic_empty() {
        let model = golden::ground_truth(EnvId::Empty6);
        let dataset = demo_trajectories(EnvId::Empty6, 3, 100);
        let report =
            score_model(&model, &dataset, &FilterConfig::default(), &EvalBudget::default(), 0);
        assert_eq!(report.total_score, ModelScore::Valid(0.0));
        assert_eq!(report.energy, 0.0);
        assert!(report.per_trajectory.iter().flatten().all(|&s| s == 0.0));
    }

    #[test]
    fn score_is_deterministic_and_exec_mode_invariant() {
        let model = golden::ground_truth(EnvId::Corners10);
        let dataset = demo_trajectories(EnvId::Corners10, 4, 7);
        let a = score_model(&model, &dataset, &FilterConfig::default(), &EvalBudget::default(), 3);
        let b = score_model(&model, &dataset, &FilterConfig::default(), &EvalBudget::default(), 3);
        let seq_cfg = FilterConfig { exec: ExecMode::Sequential, ..FilterConfig::default() };
        let c = score_model(&model, &dataset, &seq_cfg, &EvalBudget::default(), 3);
        assert_eq!(a.total_score, b.total_score);
        assert_eq!(a.per_trajectory, b.per_trajectory);
        assert_eq!(a.total_score, c.total_score);
        assert_eq!(a.per_trajectory, c.per_trajectory);
    }

    #[test]
    fn leading_observation_is_never_read() {
        let model = golden::ground_truth(EnvId::Corners10);
        let mut dataset = demo_trajectories(EnvId::Corners10, 2, 11);
        let before =
            score_model(&model, &dataset, &FilterConfig::default(), &EvalBudget::default(), 5);
        // Garble o_0: scoring starts at o_1, so nothing may change.
        for t in &mut dataset {
            t.first_obs.g = vec![3; 9];
            t.first_obs.dir = 3;
        }
        let after =
            score_model(&model, &dataset, &FilterConfig::default(), &EvalBudget::default(), 5);
        assert_eq!(before.total_score, after.total_score);
        assert_eq!(before.per_trajectory, after.per_trajectory);
    }

    #[test]
    fn throwing_observation_program_is_invalid_sentinel() {
        let mut sources = golden::ground_truth_sources(EnvId::Empty6);
        sources.observation =
            "(define (observe state action) (grid-get (state-grid state) 99 99))";
        let model = sources.parse();
        let dataset = demo_trajectories(EnvId::Empty6, 2, 4);
        let report =
            score_model(&model, &dataset, &FilterConfig::default(), &EvalBudget::default(), 0);
        assert_eq!(report.total_score, ModelScore::Invalid);
        assert!(!report.execution_errors.is_empty());
        assert!(report.execution_errors[0].message.contains("out of bounds"));
    }

    #[test]
    fn wall_ignoring_defect_scores_strictly_lower_where_walls_bite() {
        // A trajectory that bumps a wall: ground truth stays put, the
        // defect walks through, so its window diverges.
        let env = EnvId::Empty6;
        let (s, o0) = reset(env, 0);
        let mut steps = Vec::new();
        let mut cur = s;
        // Turn to face the top wall, then push into it repeatedly.
        for a in [Action::TurnLeft, Action::Forward, Action::Forward, Action::Forward] {
            let (next, obs, r, d) = step(&cur, a).unwrap();
            steps.push(TrajStep { action: a as u8, reward: r, done: d, obs: (&obs).into() });
            cur = next;
        }
        let traj = Trajectory::new(env.name(), 0, Outcome::Timeout, &o0, steps);
        let gt = golden::ground_truth(env);
        let defect = golden::defect_sources(env, golden::DefectClass::IgnoredWalls).parse();
        let cfg = FilterConfig::default();
        let budget = EvalBudget::default();
        let s_gt = score_model(&gt, &[traj.clone()], &cfg, &budget, 1);
        let s_defect = score_model(&defect, &[traj], &cfg, &budget, 1);
        let (ModelScore::Valid(a), ModelScore::Valid(b)) =
            (s_gt.total_score, s_defect.total_score)
        else {
            panic!("both models must execute")
        };
        assert!(b < a - 1e-9, "defect {b} must be strictly below ground truth {a}");
    }
}
