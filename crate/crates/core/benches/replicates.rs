use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use vlmc_oracle::harness::{run_fig1, run_fig4_table1, Experiment, ExperimentConfig, Method};
use vlmc_oracle::par::Execution;

fn config(experiment: Experiment, execution: Execution) -> ExperimentConfig {
    ExperimentConfig {
        replicates: 32,
        bootstrap_samples: 5,
        methods: vec![Method::Bic, Method::BicSlope, Method::Resampling],
        execution,
        ..ExperimentConfig::new(experiment)
    }
}

fn replicates(c: &mut Criterion) {
    let mut group = c.benchmark_group("replicates");
    group.sample_size(10);
    for execution in [Execution::Sequential, Execution::Parallel] {
        let label = format!("{execution:?}");
        group.bench_with_input(BenchmarkId::new("fig1", &label), &execution, |b, &e| {
            let cfg = config(Experiment::Fig1, e);
            b.iter(|| run_fig1(&cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("table1", &label), &execution, |b, &e| {
            let cfg = config(Experiment::Table1, e);
            b.iter(|| run_fig4_table1(&cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, replicates);
criterion_main!(benches);
