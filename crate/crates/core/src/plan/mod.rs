//! Best-first belief-space planning over a candidate model, trading off
//! expected discounted reward against expected belief-entropy reduction.
//!
//! Nodes are particle beliefs; expanding one simulates every action,
//! clusters successors by predicted observation and termination, and scores
//! children by path-probability-weighted expected reward plus the entropy
//! bonus. An optimistic goal-distance heuristic (discounted unit reward at
//! the nearest goal cell in any particle's layout, ignoring walls) plus the
//! entropy headroom keeps the search directed; disable it via
//! `use_goal_heuristic` for uniform-cost search.

use crate::dsl::value::{state_to_value, value_to_record};
use crate::dsl::{EvalBudget, ExecError, ModelEval, ModelPrograms, ObsCodes, Value};
use crate::filter::{belief_diagnostics, FilterConfig, FilterError, FilterRun, ParticleBelief};
use crate::grid::{emit, reset, step, Action, EnvId, GridState, Outcome, TrajStep, Trajectory};
use crate::rng::{self, tag};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BinaryHeap, BTreeMap, HashMap};

/// An episode counts as a win when its total reward exceeds this,
/// everywhere in the pipeline.
pub const WIN_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub expansion_budget: u32,
    pub entropy_coefficient: f64,
    pub gamma: f64,
    /// Particles propagated per (belief, action).
    pub sample_width: usize,
    pub max_depth: u32,
    /// Optimistic goal-distance heuristic; turning it off gives
    /// uniform-cost belief search.
    pub use_goal_heuristic: bool,
    /// Stop after this many expansions without best-plan improvement.
    pub stall_limit: u32,
    /// Observation branches kept per (node, action), best mass first.
    pub obs_branch_cap: usize,
}

impl Default for PlannerConfig {
    fn default() -> PlannerConfig {
        PlannerConfig {
            expansion_budget: 5_000,
            entropy_coefficient: 1.0,
            gamma: 0.95,
            sample_width: 10,
            max_depth: 60,
            use_goal_heuristic: true,
            stall_limit: 800,
            obs_branch_cap: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub action: Action,
    /// The root belief already sits on terminal states under the model.
    pub terminal_root: bool,
    /// A uniform-random action was returned (degenerate search or model
    /// execution error).
    pub fallback: bool,
    /// Model execution failed mid-search; the online loop should treat the
    /// model as suspect.
    pub error: Option<String>,
    pub expansions: u32,
    pub best_objective: f64,
}

struct Node {
    /// Distinct states with masses summing to 1.
    particles: Vec<(Value, f64)>,
    depth: u32,
    /// Probability of the observation branch path from the root.
    path_prob: f64,
    /// Accumulated discounted expected reward, path-probability weighted.
    g: f64,
    /// Accumulated entropy bonus.
    bonus: f64,
    entropy: f64,
    root_action: Option<Action>,
    terminal: bool,
    expected_reward: f64,
}

#[derive(PartialEq)]
struct HeapEntry {
    priority: f64,
    seq: u64,
    idx: usize,
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.priority.total_cmp(&other.priority).then(other.seq.cmp(&self.seq))
    }
}

fn entropy_of(particles: &[(Value, f64)]) -> f64 {
    let mut h = 0.0;
    for (_, m) in particles {
        if *m > 0.0 {
            h -= m * m.ln();
        }
    }
    h
}

/// Merges a weighted state list into distinct (state, mass) entries with
/// deterministic ordering.
fn merge_particles(raw: Vec<(Value, f64)>) -> Vec<(Value, f64)> {
    let mut groups: BTreeMap<Value, f64> = BTreeMap::new();
    let mut total = 0.0;
    for (s, w) in raw {
        *groups.entry(s).or_insert(0.0) += w;
        total += w;
    }
    groups.into_iter().map(|(s, m)| (s, m / total)).collect()
}

/// Manhattan distance from the agent to the nearest goal cell across all
/// particle layouts; `None` when no particle layout contains a goal.
fn min_goal_distance(particles: &[(Value, f64)]) -> Option<u32> {
    let mut best: Option<u32> = None;
    for (state, _) in particles {
        let Value::State(s) = state else { continue };
        for y in 0..s.grid.height as i64 {
            for x in 0..s.grid.width as i64 {
                if s.grid.get(x, y) == 4 {
                    let d = (x - s.x).unsigned_abs() as u32 + (y - s.y).unsigned_abs() as u32;
                    best = Some(best.map_or(d, |b| b.min(d)));
                }
            }
        }
    }
    best
}

fn heuristic(node: &Node, config: &PlannerConfig) -> f64 {
    if node.terminal {
        return 0.0;
    }
    // Entropy headroom: all future information gain is bounded by the
    // node's entropy, and it can occur no earlier than this depth.
    let mut h = config.entropy_coefficient * config.gamma.powi(node.depth as i32) * node.entropy;
    if config.use_goal_heuristic {
        if let Some(d) = min_goal_distance(&node.particles) {
            h += node.path_prob * config.gamma.powi((node.depth + d) as i32);
        }
    } else {
        // Uniform-cost search still needs an upper bound on future reward
        // so the best-first order stays optimistic.
        h += node.path_prob * config.gamma.powi(node.depth as i32);
    }
    h
}

/// Picks the best action for the current belief by best-first search over
/// observation-clustered successor beliefs. Never panics on bad models: a
/// degenerate search or execution error returns a uniform-random legal
/// action with the corresponding flag set.
pub fn plan(
    belief: &ParticleBelief,
    model: &ModelPrograms,
    actions: &[Action],
    config: &PlannerConfig,
    budget: &EvalBudget,
    seed: u64,
) -> PlanOutcome {
    let mut rng = rng::derive(seed, &[tag::PLAN]);
    let random_action = |rng: &mut ChaCha8Rng| actions[rng.gen_range(0..actions.len())];

    if belief.is_empty() {
        return PlanOutcome {
            action: random_action(&mut rng),
            terminal_root: false,
            fallback: true,
            error: None,
            expansions: 0,
            best_objective: f64::NEG_INFINITY,
        };
    }

    let mut eval = ModelEval::new(model, *budget);
    // Memoize deterministic dynamics across the whole search.
    let deterministic = !model.transition.samples();
    let mut memo: HashMap<(Value, u8), (Value, ObsCodes, f64, bool)> = HashMap::new();

    let root_particles =
        merge_particles(belief.particles.iter().map(|p| (p.state.clone(), p.weight)).collect());
    let root_entropy = entropy_of(&root_particles);
    let mut nodes = vec![Node {
        particles: root_particles,
        depth: 0,
        path_prob: 1.0,
        g: 0.0,
        bonus: 0.0,
        entropy: root_entropy,
        root_action: None,
        terminal: false,
        expected_reward: 0.0,
    }];
    let mut frontier = BinaryHeap::new();
    frontier.push(HeapEntry { priority: f64::INFINITY, seq: 0, idx: 0 });
    let mut seq = 1u64;

    let mut best_objective = f64::NEG_INFINITY;
    let mut best_action: Option<Action> = None;
    let mut expansions = 0u32;
    let mut since_improvement = 0u32;
    let mut root_all_terminal = true;
    let mut exec_error: Option<ExecError> = None;

    'search: while let Some(entry) = frontier.pop() {
        let node_idx = entry.idx;
        if nodes[node_idx].terminal {
            // Reached (popped) a terminal node: if it pays and the belief
            // mass mostly agrees, commit to its plan.
            if nodes[node_idx].expected_reward > 0.0 && nodes[node_idx].path_prob >= 0.5 {
                best_objective = nodes[node_idx].g + nodes[node_idx].bonus;
                best_action = nodes[node_idx].root_action;
                break 'search;
            }
            continue;
        }
        if nodes[node_idx].depth >= config.max_depth {
            continue;
        }
        if expansions >= config.expansion_budget || since_improvement >= config.stall_limit {
            break;
        }
        expansions += 1;
        since_improvement += 1;

        // Resample the node's belief down to sample_width propagation slots.
        let widths = propagation_slots(&nodes[node_idx].particles, config.sample_width, deterministic);
        for (ai, &action) in actions.iter().enumerate() {
            // Propagate.
            struct Sample {
                next: Value,
                obs: ObsCodes,
                reward: f64,
                done: bool,
                mass: f64,
            }
            let mut samples: Vec<Sample> = Vec::new();
            for (state, mass) in &widths {
                let key = (state.clone(), action as u8);
                let cached = if deterministic { memo.get(&key).cloned() } else { None };
                let (next, obs, reward, done) = match cached {
                    Some(v) => v,
                    None => {
                        let next = match eval.transition(state, action as u8, &mut rng) {
                            Ok(v) => v,
                            Err(e) => {
                                exec_error = Some(e);
                                break 'search;
                            }
                        };
                        let obs = match eval.observation(&next, action as u8) {
                            Ok(o) => ObsCodes::from(&*o),
                            Err(e) => {
                                exec_error = Some(e);
                                break 'search;
                            }
                        };
                        let (reward, done) = match eval.reward(state, action as u8, &next) {
                            Ok(v) => v,
                            Err(e) => {
                                exec_error = Some(e);
                                break 'search;
                            }
                        };
                        let out = (next, obs, reward, done);
                        if deterministic {
                            memo.insert(key, out.clone());
                        }
                        out
                    }
                };
                samples.push(Sample { next, obs, reward, done, mass: *mass });
            }

            // Cluster by (observation, done).
            let mut clusters: BTreeMap<(ObsCodes, bool), Vec<usize>> = BTreeMap::new();
            for (i, s) in samples.iter().enumerate() {
                clusters.entry((s.obs, s.done)).or_default().push(i);
            }
            let mut branches: Vec<((ObsCodes, bool), Vec<usize>, f64)> = clusters
                .into_iter()
                .map(|(k, idxs)| {
                    let mass: f64 = idxs.iter().map(|&i| samples[i].mass).sum();
                    (k, idxs, mass)
                })
                .collect();
            branches.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
            branches.truncate(config.obs_branch_cap);

            if nodes[node_idx].depth == 0 {
                let all_done = samples.iter().all(|s| s.done);
                root_all_terminal &= all_done;
            }

            // Expected child entropy for the action's information bonus.
            let kept_mass: f64 = branches.iter().map(|(_, _, m)| m).sum();
            let mut expected_child_entropy = 0.0;
            let mut children: Vec<Node> = Vec::with_capacity(branches.len());
            for ((_, done), idxs, mass) in &branches {
                let members: Vec<(Value, f64)> =
                    idxs.iter().map(|&i| (samples[i].next.clone(), samples[i].mass)).collect();
                let particles = merge_particles(members);
                let entropy = entropy_of(&particles);
                let p_branch = mass / kept_mass;
                expected_child_entropy += p_branch * entropy;
                let e_reward: f64 = idxs.iter().map(|&i| samples[i].reward * samples[i].mass).sum::<f64>()
                    / mass;
                let parent = &nodes[node_idx];
                let path_prob = parent.path_prob * p_branch;
                children.push(Node {
                    particles,
                    depth: parent.depth + 1,
                    path_prob,
                    g: parent.g
                        + config.gamma.powi(parent.depth as i32) * path_prob * e_reward,
                    bonus: 0.0, // filled below once the action bonus is known
                    entropy,
                    root_action: parent.root_action.or(Some(actions[ai])),
                    terminal: *done,
                    expected_reward: e_reward,
                });
            }
            // Information gain is discounted like reward, so plans that
            // disambiguate sooner strictly beat ones that stall first.
            let info_gain = nodes[node_idx].entropy - expected_child_entropy;
            let action_bonus = nodes[node_idx].bonus
                + config.entropy_coefficient
                    * config.gamma.powi(nodes[node_idx].depth as i32)
                    * info_gain.max(0.0);

            for mut child in children {
                child.bonus = action_bonus;
                let objective = child.g + child.bonus;
                if objective > best_objective {
                    best_objective = objective;
                    best_action = child.root_action;
                    since_improvement = 0;
                }
                let priority = objective + heuristic(&child, config);
                nodes.push(child);
                frontier.push(HeapEntry { priority, seq, idx: nodes.len() - 1 });
                seq += 1;
            }
        }

        if expansions == 1 && root_all_terminal {
            return PlanOutcome {
                action: random_action(&mut rng),
                terminal_root: true,
                fallback: true,
                error: None,
                expansions,
                best_objective,
            };
        }
    }

    if let Some(e) = exec_error {
        return PlanOutcome {
            action: random_action(&mut rng),
            terminal_root: false,
            fallback: true,
            error: Some(e.to_string()),
            expansions,
            best_objective,
        };
    }
    match best_action {
        Some(action) => PlanOutcome {
            action,
            terminal_root: false,
            fallback: false,
            error: None,
            expansions,
            best_objective,
        },
        None => PlanOutcome {
            action: random_action(&mut rng),
            terminal_root: false,
            fallback: true,
            error: None,
            expansions,
            best_objective,
        },
    }
}

/// Propagation inputs with masses. Deterministic models propagate each
/// distinct state once; stochastic models get `width` slots allocated by
/// largest remainder (each slot propagates independently, splitting its
/// state's mass) so repeated samples approximate the transition mixture.
fn propagation_slots(
    particles: &[(Value, f64)],
    width: usize,
    deterministic: bool,
) -> Vec<(Value, f64)> {
    if deterministic {
        return particles.to_vec();
    }
    let width = width.max(particles.len());
    let mut counts = vec![0usize; particles.len()];
    let mut remainders: Vec<(f64, usize)> = Vec::new();
    let mut assigned = 0usize;
    for (i, (_, m)) in particles.iter().enumerate() {
        let target = m * width as f64;
        counts[i] = target.floor() as usize;
        assigned += counts[i];
        remainders.push((target - target.floor(), i));
    }
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in remainders {
        if assigned >= width {
            break;
        }
        counts[i] += 1;
        assigned += 1;
    }
    let mut out = Vec::with_capacity(width);
    let mut total = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            out.push((particles[i].0.clone(), particles[i].1 / c as f64));
            total += particles[i].1 / c as f64;
        }
    }
    for (_, m) in &mut out {
        *m /= total;
    }
    out
}

/// Per-step belief diagnostics recorded during evaluation episodes. These
/// read the privileged true state and exist only for reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeliefStep {
    pub entropy: f64,
    pub map_correct: Option<bool>,
    pub mass_on_true: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub trajectory: Trajectory,
    pub belief_trace: Vec<BeliefStep>,
    /// Privileged latent-state log (diagnostics and rendering only).
    pub states: Vec<GridState>,
    pub reward: f64,
    pub win: bool,
    /// Steps taken by the random fallback after a model failure.
    pub fallback_steps: u32,
    pub planner_expansions: Vec<u32>,
}

/// Runs one evaluation episode: replan every step, act, update the belief
/// with the same distance-kernel filter used for scoring.
///
/// `privileged_poison` scrambles every latent state handed to the
/// diagnostics sink (and the returned state log): the firewall check that
/// the induction path never reads latent state. Planning, filtering, and
/// the recorded trajectory must be unaffected by it.
pub fn run_episode(
    env: EnvId,
    model: &ModelPrograms,
    filter_config: &FilterConfig,
    planner_config: &PlannerConfig,
    budget: &EvalBudget,
    episode_seed: u64,
    privileged_poison: Option<u64>,
) -> EpisodeResult {
    let (mut state, obs0) = reset(env, episode_seed);
    let mut states = vec![state.clone()];
    let mut steps: Vec<TrajStep> = Vec::new();
    let mut belief_trace = Vec::new();
    let mut fallback_steps = 0u32;
    let mut expansions = Vec::new();

    let mut filter_rng = rng::derive(episode_seed, &[tag::EPISODE]);
    let mut action_rng = rng::derive(episode_seed, &[tag::EPISODE, 1]);
    // The planning belief conditions on the full recorded history: the
    // leading observation and the termination flags, not just the scored
    // (action, observation) pairs. Termination evidence is a hard
    // constraint, so history-consistent rollouts are much rarer than in
    // scoring; one episode can afford far deeper rejuvenation than a
    // 25-candidate scoring round, and failed rollouts die within a few
    // steps anyway.
    let mut episode_filter = *filter_config;
    episode_filter.condition_on_termination = true;
    episode_filter.rejuvenation_cap = filter_config.rejuvenation_cap.saturating_mul(100);
    episode_filter.rejuvenation_trajectory_cap =
        filter_config.rejuvenation_trajectory_cap.saturating_mul(100);
    let placeholder = env.actions()[0] as u8;
    let mut run = FilterRun::with_initial_observation(
        ModelEval::new(model, *budget),
        episode_filter,
        &ObsCodes::from(&obs0),
        placeholder,
        &mut filter_rng,
    )
    .ok();
    let mut model_suspect = run.is_none();

    let mut outcome = Outcome::Timeout;
    let mut total_reward = 0.0;
    for t in 0..state.max_steps as u64 {
        let actions = env.actions();
        let action = match (&run, model_suspect) {
            (Some(r), false) => {
                let out = plan(
                    r.belief(),
                    model,
                    actions,
                    planner_config,
                    budget,
                    rng::mix(episode_seed, &[tag::PLAN, t]),
                );
                expansions.push(out.expansions);
                if out.error.is_some() {
                    model_suspect = true;
                }
                if out.fallback {
                    fallback_steps += 1;
                }
                out.action
            }
            _ => {
                fallback_steps += 1;
                actions[action_rng.gen_range(0..actions.len())]
            }
        };

        let (next, obs, reward, done) = match step(&state, action) {
            Ok(v) => v,
            Err(_) => break,
        };
        steps.push(TrajStep { action: action as u8, reward, done, obs: (&obs).into() });
        total_reward += reward;
        states.push(next.clone());

        if let (Some(r), false) = (&mut run, model_suspect) {
            match r.step(action as u8, &ObsCodes::from(&obs), done, &mut filter_rng) {
                Ok(_) => {
                    let diag_state = match privileged_poison {
                        None => next.clone(),
                        Some(ps) => crate::grid::poison_states(&[next.clone()], ps).remove(0),
                    };
                    let diag = belief_diagnostics(r.belief(), Some(&state_to_value(&diag_state)));
                    let map_correct = value_to_record(&diag.map_state)
                        == Some(crate::grid::StateRecord::from(&diag_state));
                    belief_trace.push(BeliefStep {
                        entropy: diag.entropy,
                        map_correct: Some(map_correct),
                        mass_on_true: diag.mass_on_true,
                    });
                }
                Err(FilterError::Exec(_)) | Err(FilterError::DegenerateBelief) | Err(FilterError::EmptyBelief) => {
                    model_suspect = true;
                    belief_trace.push(BeliefStep { entropy: f64::NAN, map_correct: None, mass_on_true: None });
                }
            }
        }

        state = next;
        if done {
            outcome = if reward > 0.0 { Outcome::Success } else { Outcome::Failure };
            break;
        }
    }

    let trajectory = Trajectory::new(env.name(), episode_seed, outcome, &obs0, steps);
    let win = total_reward > WIN_THRESHOLD;
    let _ = emit(&state);
    let states = match privileged_poison {
        None => states,
        Some(ps) => crate::grid::poison_states(&states, ps),
    };
    EpisodeResult {
        trajectory,
        belief_trace,
        states,
        reward: total_reward,
        win,
        fallback_steps,
        planner_expansions: expansions,
    }
}

/// Uniform-random baseline episode (no model, no filter).
pub fn run_random_episode(env: EnvId, episode_seed: u64) -> EpisodeResult {
    let (mut state, obs0) = reset(env, episode_seed);
    let mut states = vec![state.clone()];
    let mut steps = Vec::new();
    let mut rng = rng::derive(episode_seed, &[tag::EPISODE, 2]);
    let mut outcome = Outcome::Timeout;
    let mut total_reward = 0.0;
    for _ in 0..state.max_steps {
        let actions = env.actions();
        let action = actions[rng.gen_range(0..actions.len())];
        let (next, obs, reward, done) = match step(&state, action) {
            Ok(v) => v,
            Err(_) => break,
        };
        steps.push(TrajStep { action: action as u8, reward, done, obs: (&obs).into() });
        total_reward += reward;
        states.push(next.clone());
        state = next;
        if done {
            outcome = if reward > 0.0 { Outcome::Success } else { Outcome::Failure };
            break;
        }
    }
    let trajectory = Trajectory::new(env.name(), episode_seed, outcome, &obs0, steps);
    EpisodeResult {
        trajectory,
        belief_trace: Vec::new(),
        states,
        reward: total_reward,
        win: total_reward > WIN_THRESHOLD,
        fallback_steps: 0,
        planner_expansions: Vec::new(),
    }
}
