use std::hint::black_box;
use std::sync::Arc;

use chronorule_core::engine::EngineConfig;
use chronorule_core::kb::CompiledKb;
use chronorule_core::sim::{run_batch, run_simulation, BatchJob};
use chronorule_core::testkit::{random_kb, random_scenario, GenLimits};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn jobs(n: usize, limits: GenLimits, ticks: u64) -> Vec<BatchJob> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    (0..n)
        .map(|_| {
            let g = random_kb(&mut rng, limits);
            let scenario = random_scenario(&mut rng, &g, ticks);
            BatchJob {
                kb: Arc::new(CompiledKb::from_source(&g.source).unwrap()),
                scenario,
                ticks,
                config: EngineConfig::default(),
            }
        })
        .collect()
}

/// Matching inside one session: many rules, per-rule evaluation fanned out.
fn matching(c: &mut Criterion) {
    let limits = GenLimits { max_rules: 200, max_attrs: 6, max_temporal: 3 };
    let job = jobs(1, limits, 30).remove(0);
    let mut group = c.benchmark_group("matching");
    for parallel in [false, true] {
        let name = if parallel { "parallel" } else { "sequential" };
        group.bench_function(BenchmarkId::new(name, job.kb.rules.len()), |b| {
            let cfg = EngineConfig { parallel, ..job.config.clone() };
            b.iter(|| black_box(run_simulation(Arc::clone(&job.kb), &job.scenario, job.ticks, cfg.clone()).unwrap()))
        });
    }
    group.finish();
}

/// Independent sessions run as a batch.
fn batch(c: &mut Criterion) {
    let batch = jobs(64, GenLimits::default(), 20);
    let mut group = c.benchmark_group("batch");
    for parallel in [false, true] {
        let name = if parallel { "parallel" } else { "sequential" };
        group
            .bench_function(BenchmarkId::new(name, batch.len()), |b| b.iter(|| black_box(run_batch(&batch, parallel))));
    }
    group.finish();
}

criterion_group!(benches, matching, batch);
criterion_main!(benches);
