use std::hint::black_box;

use aoi_core::cli::{log_grid, ConfigFile};
use aoi_core::{exhaustive_oracle_with, select_policy, simulate_many, sweep, Execution};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn benches(c: &mut Criterion) {
    let file = ConfigFile::reference();
    let (ch, cfg) = (file.channel().unwrap(), file.system().unwrap());
    let theta = 0.1 / cfg.slot_duration;

    let mut group = c.benchmark_group("oracle");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exhaustive_oracle_with(&ch, &cfg, black_box(theta), exec).unwrap())
        });
    }
    group.finish();

    let thetas = log_grid(1.0, 1e4, 64).unwrap();
    let mut group = c.benchmark_group("sweep");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sweep(&ch, &cfg, black_box(&thetas), exec).unwrap())
        });
    }
    group.finish();

    let policy = select_policy(&ch, &cfg, theta).unwrap().policy;
    let seeds: Vec<u64> = (0..16).collect();
    let mut group = c.benchmark_group("simulate_many");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| simulate_many(&policy, &ch, &cfg, 200_000, black_box(&seeds), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(parallel, benches);
criterion_main!(parallel);
