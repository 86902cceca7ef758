//! The bootstrap filter: propagate, predict, kernel-reweight, resample, and
//! rejuvenate from the full history when the kernel mass collapses.

use super::kernel::{kernel_weight, obs_distance};
use super::{FilterConfig, FilterError, DEGENERATE_DISTANCE};
use crate::dsl::value::value_to_record;
use crate::dsl::{ExecError, ModelEval, ObsCodes, Value};
use crate::grid::StateRecord;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct Particle {
    pub state: Value,
    /// Normalized weight.
    pub weight: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ParticleBelief {
    pub particles: Vec<Particle>,
    /// Pre-normalization kernel mass of the propagated population at the
    /// last update (the rejuvenation trigger quantity).
    pub raw_total_weight: f64,
    /// Effective sample size 1 / sum(w^2) at the last update.
    pub ess: f64,
}

impl ParticleBelief {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejuvEvent {
    pub attempts: u32,
    pub accepted: u32,
}

/// Per-step filtering record. Everything here is plain data so traces can
/// cross worker threads and serialize to JSONL.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepTrace {
    /// Observation distance per particle of the post-observation population.
    pub distances: Vec<f64>,
    /// Normalized post-observation weights (same order).
    pub weights: Vec<f64>,
    pub raw_total_weight: f64,
    pub ess: f64,
    pub rejuvenation: Option<RejuvEvent>,
    pub degenerate: bool,
    /// Expected observation distance under the post-observation belief
    /// (DEGENERATE_DISTANCE on a degenerate step).
    pub expected_distance: f64,
    /// Expected log kernel likelihood: -expected_distance / kappa.
    pub step_score: f64,
    /// Highest-weight particle's transition endpoints, for reward replay.
    pub map_transition: Option<(StateRecord, StateRecord)>,
    /// Post-resample belief support (K records).
    pub belief_states: Vec<StateRecord>,
}

/// One filtering pass over a trajectory: owns the belief and the
/// action/observation history that rejuvenation rolls forward through.
pub struct FilterRun<'m> {
    eval: ModelEval<'m>,
    config: FilterConfig,
    belief: ParticleBelief,
    actions: Vec<u8>,
    observations: Vec<ObsCodes>,
    dones: Vec<bool>,
    /// Leading observation the initial population was conditioned on, with
    /// the placeholder action used to predict it (planning mode only; the
    /// scoring filter never reads the leading observation).
    initial_obs: Option<(u8, ObsCodes)>,
    rollouts_left: u64,
    /// Set after a trigger burned its whole cap without one acceptance; a
    /// history that defeated the full rollout budget is not retried.
    rejuvenation_dead: bool,
}

impl<'m> FilterRun<'m> {
    /// Draws the initial K particles from the model's initial-state program.
    pub fn new(
        mut eval: ModelEval<'m>,
        config: FilterConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<FilterRun<'m>, ExecError> {
        let mut particles = Vec::with_capacity(config.particles);
        for _ in 0..config.particles {
            particles.push(Particle { state: eval.initial(rng)?, weight: 1.0 / config.particles as f64 });
        }
        let k = config.particles as f64;
        Ok(FilterRun {
            eval,
            belief: ParticleBelief { particles, raw_total_weight: k, ess: k },
            rollouts_left: config.rejuvenation_trajectory_cap as u64 * config.particles as u64,
            config,
            actions: Vec::new(),
            observations: Vec::new(),
            dones: Vec::new(),
            initial_obs: None,
            rejuvenation_dead: false,
        })
    }

    /// Like [`FilterRun::new`], but conditions the initial population on the
    /// episode's leading observation (the planning belief tracks the full
    /// observation history). Fresh draws from the initial-state program are
    /// kept with probability proportional to the kernel likelihood of the
    /// leading observation, predicted with `placeholder_action`; later
    /// rejuvenation rollouts carry the same factor.
    pub fn with_initial_observation(
        mut eval: ModelEval<'m>,
        config: FilterConfig,
        obs0: &ObsCodes,
        placeholder_action: u8,
        rng: &mut ChaCha8Rng,
    ) -> Result<FilterRun<'m>, ExecError> {
        let k = config.particles;
        let cap = (config.rejuvenation_cap as u64 * k as u64).max(k as u64);
        let kernel = config.kernel;
        let mut accepted: Vec<Value> = Vec::with_capacity(k);
        let mut best = 0.0f64;
        let mut attempts = 0u64;
        while attempts < cap && accepted.len() < k {
            attempts += 1;
            let state = eval.initial(rng)?;
            let predicted = eval.observation(&state, placeholder_action)?;
            let d = obs_distance(&ObsCodes::from(&*predicted), obs0, &kernel);
            let w = kernel_weight(d, kernel.kappa);
            if w <= 0.0 {
                continue;
            }
            let keep = if w >= best {
                best = w;
                true
            } else {
                rng.gen::<f64>() < w / best
            };
            if keep {
                accepted.push(state);
            }
        }
        let mut run = FilterRun::new(eval, config, rng)?;
        if !accepted.is_empty() {
            run.belief.particles = (0..k)
                .map(|i| Particle { state: accepted[i % accepted.len()].clone(), weight: 1.0 / k as f64 })
                .collect();
        }
        run.initial_obs = Some((placeholder_action, *obs0));
        Ok(run)
    }

    pub fn belief(&self) -> &ParticleBelief {
        &self.belief
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    /// Advances the belief through one realized (action, observation) step.
    /// `realized_done` is the episode's termination flag for this step; it
    /// only affects weighting when `condition_on_termination` is set.
    pub fn step(
        &mut self,
        action: u8,
        obs: &ObsCodes,
        realized_done: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<StepTrace, FilterError> {
        if self.belief.is_empty() {
            return Err(FilterError::EmptyBelief);
        }
        let kernel = self.config.kernel;
        let k = self.config.particles;

        // Propagate every particle and weight it by the current step's
        // kernel likelihood (weights are not cumulative; the belief was
        // resampled after the previous observation).
        struct Cand {
            parent: Value,
            state: Value,
            distance: f64,
            weight: f64,
        }
        let mut population: Vec<Cand> = Vec::with_capacity(k + 4);
        let mut raw_total = 0.0f64;
        for p in &self.belief.particles {
            let next = self.eval.transition(&p.state, action, rng)?;
            let predicted = self.eval.observation(&next, action)?;
            let d = obs_distance(&ObsCodes::from(&*predicted), obs, &kernel);
            let mut w = kernel_weight(d, kernel.kappa);
            if self.config.condition_on_termination && w > 0.0 {
                let (_, done_pred) = self.eval.reward(&p.state, action, &next)?;
                if done_pred != realized_done {
                    w = 0.0;
                }
            }
            raw_total += w;
            population.push(Cand { parent: p.state.clone(), state: next, distance: d, weight: w });
        }

        self.actions.push(action);
        self.observations.push(*obs);
        self.dones.push(realized_done);

        // Rejuvenation trigger: the kernel-weighted mass cannot represent a
        // full population.
        let mut rejuvenation = None;
        if raw_total < k as f64 && self.config.rejuvenation_enabled && !self.rejuvenation_dead {
            let needed = (k as f64 - raw_total).floor().max(1.0) as u32;
            let cap =
                (self.config.rejuvenation_cap as u64 * k as u64).min(self.rollouts_left) as u32;
            if cap > 0 {
                let (accepted, attempts) = rejuvenate_into(
                    &mut self.eval,
                    self.initial_obs.as_ref(),
                    &self.actions,
                    &self.observations,
                    &self.dones,
                    needed,
                    cap,
                    &self.config,
                    rng,
                    &mut |parent, state, distance| {
                        let weight = kernel_weight(distance, kernel.kappa);
                        population.push(Cand { parent, state, distance, weight });
                    },
                );
                self.rollouts_left -= attempts as u64;
                if accepted == 0 && attempts == self.config.rejuvenation_cap as u32 * k as u32 {
                    self.rejuvenation_dead = true;
                }
                rejuvenation = Some(RejuvEvent { attempts, accepted });
            }
        }

        let total: f64 = population.iter().map(|c| c.weight).sum();
        if total <= 0.0 {
            if !self.config.rejuvenation_enabled {
                return Err(FilterError::DegenerateBelief);
            }
            // Rejuvenation exhausted: reset to fresh prior draws and charge
            // the floor penalty.
            let mut particles = Vec::with_capacity(k);
            for _ in 0..k {
                particles
                    .push(Particle { state: self.eval.initial(rng)?, weight: 1.0 / k as f64 });
            }
            let belief_states: Vec<StateRecord> =
                particles.iter().filter_map(|p| value_to_record(&p.state)).collect();
            self.belief = ParticleBelief { particles, raw_total_weight: 0.0, ess: k as f64 };
            return Ok(StepTrace {
                distances: population.iter().map(|c| c.distance).collect(),
                weights: vec![0.0; population.len()],
                raw_total_weight: raw_total,
                ess: k as f64,
                rejuvenation,
                degenerate: true,
                expected_distance: DEGENERATE_DISTANCE,
                step_score: -DEGENERATE_DISTANCE / kernel.kappa,
                map_transition: None,
                belief_states,
            });
        }

        // Normalize, diagnose, resample back to K integer counts.
        let weights: Vec<f64> = population.iter().map(|c| c.weight / total).collect();
        let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let mut expected_distance = 0.0;
        for (c, w) in population.iter().zip(&weights) {
            if *w > 0.0 {
                expected_distance += w * c.distance;
            }
        }
        let step_score = -expected_distance / kernel.kappa;

        let map_idx = (0..population.len())
            .max_by(|&a, &b| {
                weights[a]
                    .total_cmp(&weights[b])
                    .then_with(|| population[b].state.cmp(&population[a].state))
            })
            .expect("nonempty population");
        let map_transition = value_to_record(&population[map_idx].parent)
            .zip(value_to_record(&population[map_idx].state));

        let counts = largest_remainder_counts(&weights, k);
        let mut particles = Vec::with_capacity(k);
        for (c, n) in population.iter().zip(&counts) {
            for _ in 0..*n {
                particles.push(Particle { state: c.state.clone(), weight: 1.0 / k as f64 });
            }
        }
        let belief_states: Vec<StateRecord> =
            particles.iter().filter_map(|p| value_to_record(&p.state)).collect();
        self.belief = ParticleBelief { particles, raw_total_weight: raw_total, ess };

        Ok(StepTrace {
            distances: population.iter().map(|c| c.distance).collect(),
            weights,
            raw_total_weight: raw_total,
            ess,
            rejuvenation,
            degenerate: false,
            expected_distance,
            step_score,
            map_transition,
            belief_states,
        })
    }
}

/// Deterministic largest-remainder allocation of `k` slots proportional to
/// normalized weights. Ties in the fractional remainders break toward lower
/// indexes.
fn largest_remainder_counts(weights: &[f64], k: usize) -> Vec<u32> {
    let mut counts: Vec<u32> = Vec::with_capacity(weights.len());
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(weights.len());
    let mut assigned = 0u32;
    for (i, w) in weights.iter().enumerate() {
        let target = w * k as f64;
        let floor = target.floor();
        counts.push(floor as u32);
        assigned += floor as u32;
        remainders.push((target - floor, i));
    }
    let mut leftover = k as u32 - assigned.min(k as u32);
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in remainders {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}

/// Draws fresh rollouts from the initial-state program, replays the recorded
/// action history, and keeps rollouts with probability proportional to their
/// cumulative kernel likelihood (rejection sampling against the best rollout
/// seen). Returns accepted (parent, state, final-step distance) triples via
/// the sink plus (accepted, attempts).
#[allow(clippy::too_many_arguments)]
fn rejuvenate_into(
    eval: &mut ModelEval<'_>,
    initial_obs: Option<&(u8, ObsCodes)>,
    actions: &[u8],
    observations: &[ObsCodes],
    dones: &[bool],
    needed: u32,
    cap: u32,
    config: &FilterConfig,
    rng: &mut ChaCha8Rng,
    sink: &mut dyn FnMut(Value, Value, f64),
) -> (u32, u32) {
    debug_assert_eq!(actions.len(), observations.len());
    let kernel = config.kernel;
    let mut best = 0.0f64;
    let mut accepted = 0u32;
    let mut attempts = 0u32;
    while attempts < cap && accepted < needed {
        attempts += 1;
        let Ok(mut state) = eval.initial(rng) else {
            // Initial-program failures here mirror the caller's error path;
            // treat the rollout as rejected and keep counting attempts.
            break;
        };
        let mut cumulative = 1.0f64;
        if let Some((a, o)) = initial_obs {
            let Ok(predicted) = eval.observation(&state, *a) else { break };
            cumulative = kernel_weight(obs_distance(&ObsCodes::from(&*predicted), o, &kernel), kernel.kappa);
            if cumulative == 0.0 || (best > 0.0 && cumulative < best * 1e-15) {
                continue;
            }
        }
        let mut last = None;
        let mut dead = false;
        for (step_idx, (a, o)) in actions.iter().zip(observations).enumerate() {
            let parent = state.clone();
            state = match eval.transition(&parent, *a, rng) {
                Ok(s) => s,
                Err(_) => {
                    dead = true;
                    break;
                }
            };
            let predicted = match eval.observation(&state, *a) {
                Ok(p) => p,
                Err(_) => {
                    dead = true;
                    break;
                }
            };
            if config.condition_on_termination {
                match eval.reward(&parent, *a, &state) {
                    Ok((_, done_pred)) if done_pred == dones[step_idx] => {}
                    _ => {
                        dead = true;
                        break;
                    }
                }
            }
            let d = obs_distance(&ObsCodes::from(&*predicted), o, &kernel);
            cumulative *= kernel_weight(d, kernel.kappa);
            // A rollout whose cumulative mass can no longer overtake the
            // running best has acceptance probability ~0; abandon early.
            if cumulative == 0.0 || (best > 0.0 && cumulative < best * 1e-15) {
                dead = true;
                break;
            }
            last = Some((parent, state.clone(), d));
        }
        if dead || cumulative <= 0.0 {
            continue;
        }
        let Some((parent, state, d)) = last else {
            // Empty history: every fresh draw is consistent.
            sink(state.clone(), state, 0.0);
            accepted += 1;
            continue;
        };
        let accept = if cumulative >= best {
            best = cumulative;
            true
        } else {
            rng.gen::<f64>() < cumulative / best
        };
        if accept {
            sink(parent, state, d);
            accepted += 1;
        }
    }
    (accepted, attempts)
}

/// Standalone rejuvenation: fresh rollouts conditioned on a recorded
/// history. Exposed for tests and diagnostics; `FilterRun` uses the same
/// machinery internally.
pub fn rejuvenate(
    eval: &mut ModelEval<'_>,
    actions: &[u8],
    observations: &[ObsCodes],
    count: u32,
    config: &FilterConfig,
    rng: &mut ChaCha8Rng,
) -> (Vec<(Value, f64)>, RejuvEvent) {
    let mut out = Vec::new();
    let cap = config.rejuvenation_cap * config.particles as u32;
    let dones = vec![false; actions.len()];
    let (accepted, attempts) = rejuvenate_into(
        eval,
        None,
        actions,
        observations,
        &dones,
        count,
        cap,
        config,
        rng,
        &mut |_parent, state, d| out.push((state, kernel_weight(d, config.kernel.kappa))),
    );
    (out, RejuvEvent { attempts, accepted })
}

#[derive(Debug, Clone)]
pub struct BeliefDiagnostics {
    /// Shannon entropy (natural log) over distinct particle states.
    pub entropy: f64,
    /// Highest-mass state; ties break toward the lexicographically smallest.
    pub map_state: Value,
    pub map_mass: f64,
    pub mass_on_true: Option<f64>,
}

/// Entropy, MAP state, and optional posterior mass on the true latent state.
pub fn belief_diagnostics(belief: &ParticleBelief, true_state: Option<&Value>) -> BeliefDiagnostics {
    assert!(!belief.is_empty(), "diagnostics need a nonempty belief");
    let mut groups: BTreeMap<&Value, f64> = BTreeMap::new();
    for p in &belief.particles {
        *groups.entry(&p.state).or_insert(0.0) += p.weight;
    }
    let total: f64 = groups.values().sum();
    let mut entropy = 0.0;
    let mut map_state = None;
    let mut map_mass = -1.0;
    let mut mass_on_true = true_state.map(|_| 0.0);
    for (state, mass) in &groups {
        let m = mass / total;
        if m > 0.0 {
            entropy -= m * m.ln();
        }
        // BTreeMap iterates in ascending state order, so strict inequality
        // keeps the smallest state on ties.
        if m > map_mass {
            map_mass = m;
            map_state = Some((*state).clone());
        }
        if let (Some(acc), Some(ts)) = (mass_on_true.as_mut(), true_state) {
            if *state == ts {
                *acc += m;
            }
        }
    }
    BeliefDiagnostics { entropy, map_state: map_state.expect("nonempty"), map_mass, mass_on_true }
}
