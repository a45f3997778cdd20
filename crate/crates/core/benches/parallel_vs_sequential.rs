use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cellfree::orchestrator::{exhaustive_baseline, rate_sweep, RunOptions, RunPlan, SweepOptions};
use cellfree::par::Execution;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn sweep(c: &mut Criterion) {
    let mut plan = RunPlan::default();
    plan.network.aps = 4;
    plan.network.ues = 4;
    let opts = SweepOptions {
        powers_dbm: vec![35.0],
        draws: 8,
        subnetworks: vec![2],
        ..SweepOptions::default()
    };
    let mut group = c.benchmark_group("rate_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| rate_sweep(&plan, &opts, exec).unwrap())
        });
    }
    group.finish();
}

fn exhaustive(c: &mut Criterion) {
    let mut plan = RunPlan::default();
    plan.network.aps = 5;
    plan.network.ues = 3;
    plan.network.subnetworks = 2;
    let mut group = c.benchmark_group("exhaustive_baseline");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = RunOptions { exec, progress: false };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, &opts| {
            b.iter(|| exhaustive_baseline(&plan, opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, exhaustive);
criterion_main!(benches);
