use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use stepwise_core::datagen::{generate_dataset, GenConfig};
use stepwise_core::par::Execution;
use stepwise_core::pipeline::{solve_instances, SolveOptions};
use stepwise_core::strategy::StrategyKind;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn config() -> GenConfig {
    GenConfig {
        theories: 120,
        seed: 17,
        ..GenConfig::default()
    }
}

fn bench_generate(c: &mut Criterion) {
    let cfg = config();
    let mut group = c.benchmark_group("generate");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| generate_dataset(black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let instances = generate_dataset(&config(), Execution::Parallel).unwrap();
    for kind in StrategyKind::ALL {
        let mut group = c.benchmark_group(format!("solve/{kind}"));
        group.sample_size(10);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
                b.iter(|| solve_instances(black_box(&instances), SolveOptions::new(kind), exec).unwrap())
            });
        }
        group.finish();
    }
}

criterion_group!(benches, bench_generate, bench_solve);
criterion_main!(benches);
