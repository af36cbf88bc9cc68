use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ppmm::experiments::{ExperimentKind, ExperimentSpec};
use ppmm::par::map_cells;
use ppmm::{fit, sample_gaussian, EngineConfig, Execution, GaussianSpec, RngState, Strategy};
use std::hint::black_box;

/// A batch of independent replications, sequential vs rayon.
fn replications(c: &mut Criterion) {
    let mut spec = ExperimentSpec::preset(ExperimentKind::Convergence);
    spec.n_x = 500;
    spec.n_y = 500;
    spec.engine.max_iterations = 20;
    spec.engine.tolerance = 0.0;
    let cells: Vec<usize> = (0..8).collect();
    let mut group = c.benchmark_group("replications_d10_n500");
    group.sample_size(10);
    for execution in [Execution::Sequential, Execution::Parallel] {
        group.bench_function(BenchmarkId::from_parameter(format!("{execution:?}")), |b| {
            b.iter(|| {
                map_cells(execution, &cells, |&rep| {
                    let (x, y, seed) = spec.generate(10, rep).unwrap();
                    fit(&x, &y, Strategy::ppmm(), &spec.engine_for(seed))
                        .unwrap()
                        .trace
                        .final_displacement()
                })
            })
        });
    }
    group.finish();
}

/// Fixed number of iterations per strategy.
fn iterations(c: &mut Criterion) {
    let mut rng = RngState::new(1);
    let x = sample_gaussian(&GaussianSpec::ar1(10, -2.0, 0.8).unwrap(), 2000, &mut rng).unwrap();
    let y = sample_gaussian(&GaussianSpec::ar1(10, 2.0, 0.5).unwrap(), 2000, &mut rng).unwrap();
    let config = EngineConfig {
        max_iterations: 10,
        tolerance: 0.0,
        record_timing: false,
        ..EngineConfig::default()
    };
    let mut group = c.benchmark_group("ten_iterations_d10_n2000");
    group.sample_size(10);
    for strategy in [Strategy::ppmm(), Strategy::random(), Strategy::sliced(10)] {
        group.bench_function(BenchmarkId::from_parameter(strategy), |b| {
            b.iter(|| fit(black_box(&x), black_box(&y), strategy, &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, replications, iterations);
criterion_main!(benches);
