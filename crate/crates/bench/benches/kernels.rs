use std::hint::black_box;

use combeo::ensemble::ensemble_mean;
use combeo::gain::{compute_gain, gain_numerator, innovation_covariance, GainState};
use combeo::innovation::stack_innovation_matrix;
use combeo::*;
use criterion::{criterion_group, criterion_main, BenchmarkId as Id, Criterion};
use nalgebra::DVector;

fn evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    for id in [BenchmarkId::B6, BenchmarkId::B9, BenchmarkId::F3, BenchmarkId::F8, BenchmarkId::F10] {
        let inst = make_instance(id, 1000, 50, 0).unwrap();
        let x = inst.bounds().sample(&mut RngStream::new(1, 0));
        group.bench_function(Id::from_parameter(id), |b| b.iter(|| inst.evaluate(black_box(x.as_slice()))));
    }
    group.finish();
}

fn gain(c: &mut Criterion) {
    let mut group = c.benchmark_group("gain");
    for (n, pop) in [(10, 50), (100, 200)] {
        let bounds = Bounds::uniform(n, -5.0, 5.0).unwrap();
        let mut rng = RngStream::new(3, 0);
        let ens = Ensemble::uniform(&bounds, pop, &mut rng).unwrap();
        let innov: Vec<DVector<f64>> = (0..pop).map(|_| DVector::from_fn(2, |_, _| rng.uniform())).collect();
        let f = stack_innovation_matrix(&innov).unwrap();
        let state = GainState::new(ensemble_mean(&ens), 1.0);
        let noise = NoiseIntensity::diagonal(1, 1e-2, 1, 1e-2).block_covariance();
        group.bench_function(Id::new("n_pop", format!("{n}x{pop}")), |b| {
            b.iter(|| {
                let (num, _) = gain_numerator(&ens, &f, &state, 1.0, DriftForm::Driver).unwrap();
                let cov = innovation_covariance(&f, 0.8, &noise).unwrap();
                compute_gain(&num, &cov).unwrap()
            })
        });
    }
    group.finish();
}

fn iteration(c: &mut Criterion) {
    let inst = make_instance(BenchmarkId::B6, 30, 30, 0).unwrap();
    let cfg = OptimizerConfig {
        population: 50,
        max_iter: 10,
        target_error: 0.0,
        ..Default::default()
    };
    let mut group = c.benchmark_group("ten_iterations");
    group.bench_function("greedy-scramble", |b| b.iter(|| run_greedy_scramble(&inst, &cfg).unwrap()));
    group.bench_function("elementwise-scramble", |b| b.iter(|| run_elementwise_scramble(&inst, &cfg).unwrap()));
    group.bench_function("best-memory", |b| b.iter(|| run_best_memory(&inst, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, evaluation, gain, iteration);
criterion_main!(benches);
