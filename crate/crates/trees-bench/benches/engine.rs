use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use trees_bench::{random_graph, random_signal, random_values};
use trees_core::apps::{bfs_program, fft_program, fib_program, mergesort_program};
use trees_core::{run_program, BackendConfig, RunConfig};

fn config(backend: BackendConfig) -> RunConfig {
    RunConfig {
        backend,
        capacity: 1 << 20,
        ..RunConfig::default()
    }
}

fn backends() -> Vec<(&'static str, BackendConfig)> {
    vec![
        ("seq", BackendConfig::Sequential),
        ("par4", BackendConfig::parallel(4)),
    ]
}

fn bench_fib(c: &mut Criterion) {
    let mut group = c.benchmark_group("fib18");
    group.sample_size(10);
    let program = fib_program(18).unwrap();
    for (name, backend) in backends() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &backend, |b, backend| {
            b.iter(|| run_program(&program, &config(*backend)).unwrap().metrics.work_tasks);
        });
    }
    group.finish();
}

fn bench_mergesort(c: &mut Criterion) {
    let mut group = c.benchmark_group("mergesort_8k");
    group.sample_size(10);
    let values = random_values(1 << 13, 7);
    for use_map in [false, true] {
        let program = mergesort_program(&values, use_map).unwrap();
        let label = if use_map { "map" } else { "naive" };
        group.bench_with_input(BenchmarkId::from_parameter(label), &program, |b, program| {
            b.iter(|| run_program(program, &config(BackendConfig::Sequential)).unwrap());
        });
    }
    group.finish();
}

fn bench_bfs(c: &mut Criterion) {
    let mut group = c.benchmark_group("bfs_4k_vertices");
    group.sample_size(10);
    let graph = random_graph(4096, 32768, 11);
    let program = bfs_program(&graph, 0).unwrap();
    for (name, backend) in backends() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &backend, |b, backend| {
            b.iter(|| run_program(&program, &config(*backend)).unwrap());
        });
    }
    group.finish();
}

fn bench_fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_4k");
    group.sample_size(10);
    let signal = random_signal(1 << 12, 23);
    let program = fft_program(&signal).unwrap();
    for (name, backend) in backends() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &backend, |b, backend| {
            b.iter(|| run_program(&program, &config(*backend)).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_fib, bench_mergesort, bench_bfs, bench_fft);
criterion_main!(benches);
