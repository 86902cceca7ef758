//! Parallel vs. sequential throughput of the hot paths: candidate scoring
//! over a trajectory dataset, and full evaluation episodes.

use beliefworld::dsl::{golden, EvalBudget};
use beliefworld::filter::FilterConfig;
use beliefworld::grid::EnvId;
use beliefworld::harness::collect_demonstrations;
use beliefworld::par::ExecMode;
use beliefworld::plan::{run_episode, PlannerConfig};
use beliefworld::score::score_model;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_score_model(c: &mut Criterion) {
    let env = EnvId::Corners10;
    let (dataset, _) = collect_demonstrations(env, 10, 0);
    let gt = golden::ground_truth(env);
    let defect = golden::defect_sources(env, golden::DefectClass::WrongInit).parse();
    let budget = EvalBudget::default();

    let mut group = c.benchmark_group("score_model");
    group.sample_size(10);
    for exec in [ExecMode::Parallel, ExecMode::Sequential] {
        let config = FilterConfig { exec, ..FilterConfig::default() };
        group.bench_with_input(
            BenchmarkId::new("ground_truth", format!("{exec:?}")),
            &config,
            |b, config| b.iter(|| score_model(&gt, &dataset, config, &budget, 7)),
        );
        group.bench_with_input(
            BenchmarkId::new("wrong_init_defect", format!("{exec:?}")),
            &config,
            |b, config| b.iter(|| score_model(&defect, &dataset, config, &budget, 7)),
        );
    }
    group.finish();
}

fn bench_episode(c: &mut Criterion) {
    let env = EnvId::Corners10;
    let gt = golden::ground_truth(env);
    let filter = FilterConfig::default();
    let planner = PlannerConfig::default();
    let budget = EvalBudget::default();

    let mut group = c.benchmark_group("episode");
    group.sample_size(10);
    group.bench_function("ground_truth_corners", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            run_episode(env, &gt, &filter, &planner, &budget, seed, None)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_score_model, bench_episode);
criterion_main!(benches);
