//! Query-by-committee disagreement over transition programs.
//!
//! The transition models proposed so far vote on the successor of a
//! (state, action) query; normalized vote entropy flags dynamics contexts
//! where the current model family disagrees. Diagnostic only: it never
//! enters the selection objective.

use super::TrajectoryTrace;
use crate::dsl::value::record_to_value;
use crate::dsl::{ComponentProgram, EvalBudget, ObsCodes, Value};
use crate::grid::{Action, StateRecord};
use crate::rng::{self, tag};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Belief particles enter the QBC query set every STRIDE-th step.
const QBC_STEP_STRIDE: usize = 4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisagreementContext {
    pub state: StateRecord,
    pub action: u8,
    pub vote_entropy: f64,
    /// The realized observation at the step whose belief supplied the
    /// particle; prompts render this, never the latent state.
    pub observation: ObsCodes,
}

/// Normalized vote entropy of the committee's successor votes for one
/// (state, action) query. Stochastic members are evaluated once each from
/// identical per-query streams, so duplicated programs vote identically.
/// Members whose evaluation fails abstain; fewer than two voters gives 0.
pub fn vote_entropy(
    committee: &[&ComponentProgram],
    state: &Value,
    action: u8,
    budget: &EvalBudget,
    query_seed: u64,
) -> f64 {
    if committee.len() < 2 {
        return 0.0;
    }
    let mut votes: BTreeMap<Value, u32> = BTreeMap::new();
    let mut voters = 0u32;
    for member in committee {
        let mut rng = rng::derive(query_seed, &[tag::QBC]);
        match crate::dsl::eval_transition_program(member, state, action, &mut rng, budget) {
            Ok(next) => {
                *votes.entry(next).or_insert(0) += 1;
                voters += 1;
            }
            Err(_) => {}
        }
    }
    if voters < 2 {
        return 0.0;
    }
    let n = voters as f64;
    let mut h = 0.0;
    for &count in votes.values() {
        let p = count as f64 / n;
        h -= p * p.ln();
    }
    h / n.ln()
}

/// Evaluates committee disagreement on belief particles visited during
/// filtering, under both the realized and counterfactual actions, and
/// returns the top-k contexts by entropy. Ties break toward the earliest
/// (trajectory, step) and lowest action index.
pub fn qbc_contexts(
    committee: &[&ComponentProgram],
    traces: &[TrajectoryTrace],
    actions: &[Action],
    top_k: usize,
    budget: &EvalBudget,
    seed: u64,
) -> Vec<DisagreementContext> {
    if committee.len() < 2 || top_k == 0 {
        return Vec::new();
    }
    struct Scored {
        ve: f64,
        traj: usize,
        step: usize,
        action_idx: usize,
        context: DisagreementContext,
    }
    let mut scored: Vec<Scored> = Vec::new();
    let mut seen: std::collections::HashSet<(StateRecord, u8)> = std::collections::HashSet::new();
    for (ti, trace) in traces.iter().enumerate() {
        for (t, st) in trace.steps.iter().enumerate().step_by(QBC_STEP_STRIDE) {
            let obs = trace.observations[t];
            let mut distinct: Vec<&StateRecord> = st.belief_states.iter().collect();
            distinct.sort_unstable();
            distinct.dedup();
            for (pi, rec) in distinct.into_iter().enumerate() {
                let state = record_to_value(rec);
                for (ai, a) in actions.iter().enumerate() {
                    let key = (rec.clone(), *a as u8);
                    if !seen.insert(key) {
                        continue;
                    }
                    let query_seed =
                        rng::mix(seed, &[tag::QBC, ti as u64, t as u64, pi as u64, ai as u64]);
                    let ve = vote_entropy(committee, &state, *a as u8, budget, query_seed);
                    if ve > 0.0 {
                        scored.push(Scored {
                            ve,
                            traj: ti,
                            step: t,
                            action_idx: ai,
                            context: DisagreementContext {
                                state: rec.clone(),
                                action: *a as u8,
                                vote_entropy: ve,
                                observation: obs,
                            },
                        });
                    }
                }
            }
        }
    }
    scored.sort_by(|a, b| {
        b.ve.total_cmp(&a.ve)
            .then(a.traj.cmp(&b.traj))
            .then(a.step.cmp(&b.step))
            .then(a.action_idx.cmp(&b.action_idx))
    });
    scored.into_iter().take(top_k).map(|s| s.context).collect()
}

#[cfg(test)]
mod tests {
    use super::super::score_model;
    use super::super::tests::demo_trajectories;
    use super::*;
    use crate::dsl::value::state_to_value;
    use crate::dsl::{golden, parse, ComponentKind};
    use crate::filter::FilterConfig;
    use crate::grid::{reset, Cell, EnvId};

    fn teleport_program(x: i64, y: i64) -> ComponentProgram {
        parse(
            &format!(
                "(define (transition state action rng)
                   (make-state (state-grid state) {x} {y} (state-dir state)
                               (state-carry state) (+ (state-step state) 1)))"
            ),
            ComponentKind::Transition,
        )
        .unwrap()
    }

    #[test]
    fn committee_of_one_is_zero() {
        let gt = golden::ground_truth(EnvId::Empty6);
        let (s, _) = reset(EnvId::Empty6, 0);
        let ve = vote_entropy(&[&gt.transition], &state_to_value(&s), 2, &EvalBudget::default(), 1);
        assert_eq!(ve, 0.0);
    }

    #[test]
    fn unanimous_pair_is_zero_split_pair_is_one() {
        let (s, _) = reset(EnvId::Empty6, 0);
        let sv = state_to_value(&s);
        let budget = EvalBudget::default();
        let a = teleport_program(2, 2);
        let b = teleport_program(2, 2);
        let c = teleport_program(3, 3);
        assert_eq!(vote_entropy(&[&a, &b], &sv, 2, &budget, 9), 0.0);
        let ve = vote_entropy(&[&a, &c], &sv, 2, &budget, 9);
        assert!((ve - 1.0).abs() < 1e-12, "{ve}");
    }

    #[test]
    fn entropy_is_permutation_invariant_and_bounded() {
        let (s, _) = reset(EnvId::Empty6, 0);
        let sv = state_to_value(&s);
        let budget = EvalBudget::default();
        let progs = [teleport_program(1, 1), teleport_program(2, 2), teleport_program(2, 2)];
        let fwd: Vec<&ComponentProgram> = progs.iter().collect();
        let rev: Vec<&ComponentProgram> = progs.iter().rev().collect();
        let a = vote_entropy(&fwd, &sv, 2, &budget, 5);
        let b = vote_entropy(&rev, &sv, 2, &budget, 5);
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn lava_disagreement_contexts_point_at_forward() {
        // Two committee members that differ only on walking into lava:
        // ground truth walks in, the defect treats lava as floor... they
        // agree there. Instead: ground truth vs a transition that refuses
        // to enter lava. Their votes split exactly on forward-at-lava.
        let env = EnvId::Lava10;
        let gt = golden::ground_truth(env);
        let cautious = parse(
            "(define (dx d) (cond ((= d NORTH) 0) ((= d EAST) 1) ((= d SOUTH) 0) (else -1)))
             (define (dy d) (cond ((= d NORTH) -1) ((= d EAST) 0) ((= d SOUTH) 1) (else 0)))
             (define (walkable c) (or (= c FLOOR) (= c GOAL)))
             (define (transition state action rng)
               (let ((g (state-grid state)) (x (state-x state)) (y (state-y state))
                     (d (state-dir state)) (carry (state-carry state))
                     (step (+ (state-step state) 1))
                     (nx (+ x (dx d))) (ny (+ y (dy d)))
                     (ahead (if (in-bounds g nx ny) (grid-get g nx ny) WALL)))
                 (cond
                   ((= action LEFT) (make-state g x y (mod (+ d 3) 4) carry step))
                   ((= action RIGHT) (make-state g x y (mod (+ d 1) 4) carry step))
                   ((and (= action FORWARD) (walkable ahead)) (make-state g nx ny d carry step))
                   (else (make-state g x y d carry step)))))",
            ComponentKind::Transition,
        )
        .unwrap();
        let committee = vec![&gt.transition, &cautious];

        let dataset = demo_trajectories(env, 6, 40);
        let report = score_model(&gt, &dataset, &FilterConfig::default(), &EvalBudget::default(), 2);
        let contexts = qbc_contexts(
            &committee,
            &report.traces,
            env.actions(),
            5,
            &EvalBudget::default(),
            77,
        );
        for ctx in &contexts {
            assert_eq!(ctx.action, Action::Forward as u8, "only forward splits the committee");
            // The particle must be lava-adjacent in its facing direction.
            let state = ctx.state.decode(100).unwrap();
            let (dx, dy) = state.agent_dir.delta();
            let ahead =
                (state.agent_pos.0 + dx, state.agent_pos.1 + dy);
            assert_eq!(state.layout.get(ahead.0, ahead.1), Cell::Lava, "{state:?}");
            assert!((ctx.vote_entropy - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn top_k_truncates_sorted() {
        let env = EnvId::Corners10;
        let gt = golden::ground_truth(env);
        let spin = teleport_program(5, 5);
        let committee = vec![&gt.transition, &spin];
        let dataset = demo_trajectories(env, 4, 3);
        let report = score_model(&gt, &dataset, &FilterConfig::default(), &EvalBudget::default(), 2);
        let all = qbc_contexts(&committee, &report.traces, env.actions(), 1000, &EvalBudget::default(), 5);
        let three = qbc_contexts(&committee, &report.traces, env.actions(), 3, &EvalBudget::default(), 5);
        assert!(all.len() > 3);
        assert_eq!(three.len(), 3);
        for w in three.windows(2) {
            assert!(w[0].vote_entropy >= w[1].vote_entropy);
        }
    }
}
