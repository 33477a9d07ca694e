use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use reversal_lab::par;
use reversal_lab::scenario::{run_scenario, sweep, Dimensions, ScenarioConfig};

fn suite(scenario: &str, d: usize, count: usize) -> Vec<ScenarioConfig> {
    par::seeds(1000, count)
        .into_iter()
        .map(|seed| {
            let mut cfg = ScenarioConfig::new(scenario);
            cfg.dimensions = Dimensions { system: d, apparatus: d, device: d };
            cfg.seed = Some(seed);
            cfg
        })
        .collect()
}

fn fidelity(cfg: &ScenarioConfig) -> f64 {
    run_scenario(cfg).unwrap().report.fidelities.joint
}

fn random_suites(c: &mut Criterion) {
    let mut group = c.benchmark_group("random_suite");
    group.sample_size(10);
    for (scenario, d) in [("pure-with-copy", 3), ("mixture-with-copy", 3), ("pure-with-copy", 4)] {
        let configs = suite(scenario, d, 64);
        let id = format!("{scenario}/d{d}");
        group.bench_with_input(BenchmarkId::new("sequential", &id), &configs, |b, cfgs| {
            b.iter(|| black_box(par::map_sequential(cfgs, fidelity)))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", &id), &configs, |b, cfgs| {
            b.iter(|| black_box(par::map_parallel(cfgs, fidelity)))
        });
    }
    group.finish();
}

fn seed_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("seed_sweep");
    group.sample_size(10);
    let mut cfg = ScenarioConfig::new("mixture-with-copy");
    cfg.dimensions = Dimensions { system: 3, apparatus: 3, device: 3 };
    let grid: Vec<f64> = (0..48).map(|k| k as f64).collect();
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    for jobs in [1, threads.max(2)] {
        group.bench_with_input(BenchmarkId::new("jobs", jobs), &jobs, |b, &jobs| {
            b.iter(|| black_box(sweep(&cfg, "seed", &grid, jobs).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, random_suites, seed_sweep);
criterion_main!(benches);
