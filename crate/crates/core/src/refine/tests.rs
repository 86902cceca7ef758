use super::*;
use crate::grid::{reset, step, Outcome, TrajStep};
use rand::Rng;

fn synthetic_node(id: u64, score: ModelScore, parent: Option<u64>, expansions: u32, visits: u32) -> PoolNode {
    let src = "(define (init rng) (make-state (make-grid 3 3 FLOOR) 1 1 NORTH NONE 0))";
    let sources = [
        src.to_string(),
        "(define (transition state action rng) state)".to_string(),
        "(define (observe state action) (make-obs (make-grid 3 3 UNSEEN) NORTH NONE))".to_string(),
        "(define (reward state action next) (pair 0.0 false))".to_string(),
    ];
    let (mut model, _) = CandidateModel::from_sources(id, sources, Provenance::Scripted);
    model.score = score;
    model.parent_id = parent;
    model.expansions = expansions;
    model.visits = visits;
    PoolNode { model, label: format!("synthetic-{id}"), diagnostics: String::new(), qbc: Vec::new() }
}

fn demo_dataset(env: EnvId, n: usize, seed: u64) -> Vec<Trajectory> {
    let mut out = Vec::new();
    for e in 0..n as u64 {
        let ep = seed + e;
        let mut stream = rng::derive(ep, &[0xd0]);
        let (mut s, o0) = reset(env, ep);
        let mut steps = Vec::new();
        let mut outcome = Outcome::Timeout;
        for _ in 0..20 {
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
        out.push(Trajectory::new(env.name(), ep, outcome, &o0, steps));
    }
    out
}

fn scripted_ctx<'a>(
    proposer: &'a Proposer,
    dataset: &'a [Trajectory],
    filter: &'a FilterConfig,
    budget: &'a EvalBudget,
    config: &'a RefinementConfig,
    seed: u64,
) -> RoundCtx<'a> {
    RoundCtx {
        proposer,
        env: EnvId::Empty6,
        level: PromptLevel::L3,
        dataset,
        filter,
        budget,
        config,
        run_seed: seed,
    }
}

#[test]
fn empty_pool_selects_none() {
    let pool = CandidatePool::new();
    assert_eq!(pool.ucb_select(1.0), None);
}

#[test]
fn zero_exploration_picks_highest_mean() {
    let mut pool = CandidatePool::new();
    pool.nodes.push(synthetic_node(0, ModelScore::Valid(-5.0), None, 0, 0));
    pool.nodes.push(synthetic_node(1, ModelScore::Valid(-1.0), None, 0, 0));
    pool.nodes.push(synthetic_node(2, ModelScore::Valid(-3.0), None, 0, 0));
    pool.total_expansions = 3;
    assert_eq!(pool.ucb_select(0.0), Some(1));
}

#[test]
fn ucb_hand_computed_fixture() {
    // Parent node 0 with visits 4; child A (id 1) mean child score 1.0 over
    // 3 expansions; child B (id 2) own score 0.5, never expanded.
    let mut pool = CandidatePool::new();
    pool.nodes.push(synthetic_node(0, ModelScore::Invalid, None, 1, 4));
    pool.nodes.push(synthetic_node(1, ModelScore::Valid(0.2), Some(0), 3, 3));
    pool.nodes.push(synthetic_node(2, ModelScore::Valid(0.5), Some(0), 0, 0));
    // Three children of A with mean 1.0.
    pool.nodes.push(synthetic_node(3, ModelScore::Valid(0.8), Some(1), 0, 0));
    pool.nodes.push(synthetic_node(4, ModelScore::Valid(1.0), Some(1), 0, 0));
    pool.nodes.push(synthetic_node(5, ModelScore::Valid(1.2), Some(1), 0, 0));
    pool.total_expansions = 4;

    let ucb_a = pool.ucb_value(1, 1.0);
    let ucb_b = pool.ucb_value(2, 1.0);
    assert!((ucb_a - (1.0 + (4.0f64.ln() / 4.0).sqrt())).abs() < 1e-12, "{ucb_a}");
    assert!((ucb_b - (0.5 + 4.0f64.ln().sqrt())).abs() < 1e-12, "{ucb_b}");
    assert!((ucb_a - 1.5887050112577374).abs() < 1e-9);
    assert!((ucb_b - 1.6774100225154747).abs() < 1e-9);
    // B wins despite the lower mean.
    let grand_children_win =
        [1u64, 2].into_iter().max_by(|a, b| pool.ucb_value(*a, 1.0).total_cmp(&pool.ucb_value(*b, 1.0)));
    assert_eq!(grand_children_win, Some(2));
}

#[test]
fn invalid_nodes_participate_with_neg_infinity() {
    let mut pool = CandidatePool::new();
    pool.nodes.push(synthetic_node(0, ModelScore::Invalid, None, 0, 0));
    pool.nodes.push(synthetic_node(1, ModelScore::Invalid, None, 0, 0));
    pool.total_expansions = 2;
    // All -inf: lowest id wins the tie so refinement can proceed from its
    // diagnostics.
    assert_eq!(pool.ucb_select(1.0), Some(0));
}

#[test]
fn round_accounting_j_times_m() {
    let env = EnvId::Empty6;
    let dataset = demo_dataset(env, 3, 10);
    let proposer = Proposer::Scripted(crate::propose::ScriptedProposer { env });
    let filter = FilterConfig::default();
    let budget = EvalBudget::default();
    let config = RefinementConfig { rounds: 2, candidates_per_round: 5, ..RefinementConfig::default() };
    let ctx = scripted_ctx(&proposer, &dataset, &filter, &budget, &config, 42);
    let mut pool = CandidatePool::new();
    for _ in 0..config.rounds {
        rex_round(&mut pool, &ctx);
    }
    assert_eq!(pool.nodes.len(), 10, "J=2, M=5 gives exactly 10 nodes");
    assert_eq!(pool.round_index, 2);
    assert_eq!(pool.total_expansions, 2);
    // Round 2 had a parent; its expansion must be booked.
    assert_eq!(pool.nodes.iter().map(|n| n.model.expansions).sum::<u32>(), 1);
}

#[test]
fn unparseable_proposals_become_invalid_nodes() {
    struct Garbage;
    // Simulate via direct insertion: the pool path for parse failures.
    let (model, err) = CandidateModel::from_sources(
        0,
        std::array::from_fn(|_| "(((".to_string()),
        Provenance::Scripted,
    );
    assert!(err.is_some());
    assert_eq!(model.score, ModelScore::Invalid);
    assert!(model.programs.is_none());
    let _ = Garbage;
}

#[test]
fn select_final_mechanics() {
    // Equal scores: both chosen with ~equal frequency.
    let mut pool = CandidatePool::new();
    pool.nodes.push(synthetic_node(0, ModelScore::Valid(-2.0), None, 0, 0));
    pool.nodes.push(synthetic_node(1, ModelScore::Valid(-2.0), None, 0, 0));
    let mut counts = [0u32; 2];
    for i in 0..2000 {
        let mut rng = rng::derive(i, &[7]);
        let id = select_final(&pool, 0.1, &mut rng).unwrap();
        counts[id as usize] += 1;
    }
    let f = counts[0] as f64 / 2000.0;
    assert!((f - 0.5).abs() < 0.05, "symmetric softmax should be ~0.5, got {f}");

    // Scores {0, -10, -12}: population std ~5.2493, so the near-best set is
    // the singleton argmax.
    let mut pool = CandidatePool::new();
    pool.nodes.push(synthetic_node(0, ModelScore::Valid(0.0), None, 0, 0));
    pool.nodes.push(synthetic_node(1, ModelScore::Valid(-10.0), None, 0, 0));
    pool.nodes.push(synthetic_node(2, ModelScore::Valid(-12.0), None, 0, 0));
    assert_eq!(pool.near_best(), vec![0]);
    for i in 0..50 {
        let mut rng = rng::derive(i, &[8]);
        assert_eq!(select_final(&pool, 0.1, &mut rng).unwrap(), 0);
    }

    // Tiny temperature recovers argmax within the near-best set.
    let mut pool = CandidatePool::new();
    pool.nodes.push(synthetic_node(0, ModelScore::Valid(-1.0), None, 0, 0));
    pool.nodes.push(synthetic_node(1, ModelScore::Valid(-1.001), None, 0, 0));
    for i in 0..200 {
        let mut rng = rng::derive(i, &[9]);
        assert_eq!(select_final(&pool, 1e-6, &mut rng).unwrap(), 0);
    }

    // No valid nodes: the caller falls back to a random policy.
    let mut pool = CandidatePool::new();
    pool.nodes.push(synthetic_node(0, ModelScore::Invalid, None, 0, 0));
    let mut rng = rng::derive(0, &[10]);
    assert!(select_final(&pool, 0.1, &mut rng).is_err());
}

#[test]
fn argmax_always_in_near_best() {
    let mut stream = rng::derive(77, &[11]);
    for _ in 0..1000 {
        let n = stream.gen_range(1..12usize);
        let mut pool = CandidatePool::new();
        for id in 0..n as u64 {
            let score = if stream.gen::<f64>() < 0.2 {
                ModelScore::Invalid
            } else {
                ModelScore::Valid(stream.gen::<f64>() * -30.0)
            };
            pool.nodes.push(synthetic_node(id, score, None, 0, 0));
        }
        let near = pool.near_best();
        let best = pool
            .nodes
            .iter()
            .filter_map(|nd| nd.model.score.valid().map(|s| (nd.model.id, s)))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            None => assert!(near.is_empty()),
            Some((id, _)) => assert!(near.contains(&id), "argmax must be in the near-best set"),
        }
    }
}

#[test]
fn pool_max_score_is_monotone_and_runs_reproduce() {
    let env = EnvId::Empty6;
    let dataset = demo_dataset(env, 3, 30);
    let proposer = Proposer::Scripted(crate::propose::ScriptedProposer { env });
    let filter = FilterConfig::default();
    let budget = EvalBudget::default();
    let config = RefinementConfig { rounds: 3, ..RefinementConfig::default() };
    let run = |seed: u64| {
        let ctx = scripted_ctx(&proposer, &dataset, &filter, &budget, &config, seed);
        let mut pool = CandidatePool::new();
        let mut best = f64::NEG_INFINITY;
        for _ in 0..config.rounds {
            rex_round(&mut pool, &ctx);
            let now = pool.best_score().unwrap_or(f64::NEG_INFINITY);
            assert!(now >= best, "max valid score must not decrease");
            best = now;
        }
        let scores: Vec<ModelScore> = pool.nodes.iter().map(|n| n.model.score).collect();
        (scores, pool)
    };
    let (scores_a, pool_a) = run(5);
    let (scores_b, _) = run(5);
    assert_eq!(scores_a, scores_b, "same seed, same pool scores");

    // Checkpoint round-trips.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pool.json");
    save_checkpoint(&pool_a, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded.nodes.len(), pool_a.nodes.len());
    assert_eq!(loaded.round_index, pool_a.round_index);
    for (a, b) in loaded.nodes.iter().zip(&pool_a.nodes) {
        assert_eq!(a.model.score, b.model.score);
        assert_eq!(a.model.sources, b.model.sources);
        assert_eq!(a.model.parent_id, b.model.parent_id);
    }
    // Saving the loaded pool is byte-identical.
    let path2 = dir.path().join("pool2.json");
    save_checkpoint(&loaded, &path2).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
}

#[test]
fn online_update_rescales_and_grows() {
    let env = EnvId::Empty6;
    let mut dataset = demo_dataset(env, 2, 60);
    let proposer = Proposer::Scripted(crate::propose::ScriptedProposer { env });
    let filter = FilterConfig::default();
    let budget = EvalBudget::default();
    let config = RefinementConfig { rounds: 1, ..RefinementConfig::default() };
    let ctx = scripted_ctx(&proposer, &dataset, &filter, &budget, &config, 8);
    let mut pool = CandidatePool::new();
    rex_round(&mut pool, &ctx);
    let before = pool.nodes.len();

    dataset.extend(demo_dataset(env, 1, 99));
    let ctx = scripted_ctx(&proposer, &dataset, &filter, &budget, &config, 8);
    let (selected, report) = online_update(&mut pool, &ctx).unwrap();
    assert!(pool.nodes.len() <= before + config.candidates_per_round as usize);
    assert!(pool.nodes.len() > before);
    assert!(report.new_ids.len() <= config.candidates_per_round as usize);
    // The selected model ties the pool's best score.
    let best = pool.best_score().unwrap();
    let sel = pool.get(selected).unwrap().model.score.valid().unwrap();
    assert!(sel >= best - 1e-9 || pool.near_best().contains(&selected));
}
