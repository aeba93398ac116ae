use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use popsynth_bench::persons_problem;
use popsynth_core::nsga2::{evolve, fast_nondominated_sort};
use popsynth_core::population_model::generate_candidate;
use popsynth_core::rng::StreamSeed;
use popsynth_core::EvolutionConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn one_generation(c: &mut Criterion) {
    let (problem, config) = persons_problem().expect("fixture loads");
    let config = EvolutionConfig {
        generations: 1,
        ..config
    };
    let mut group = c.benchmark_group("persons");
    group.sample_size(10);
    group.bench_function("init_plus_one_generation", |b| {
        b.iter(|| evolve(black_box(&problem), &config).unwrap())
    });
    let candidate = generate_candidate(
        &problem.sampler,
        problem.roster_len,
        &problem.rules,
        StreamSeed::new(1),
        100,
    )
    .unwrap();
    group.bench_function("evaluate_7000", |b| {
        b.iter(|| problem.objectives.evaluate(black_box(&candidate)).unwrap())
    });
    group.finish();
}

fn sorting(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let points: Vec<Vec<f64>> = (0..200).map(|_| (0..5).map(|_| rng.gen::<f64>()).collect()).collect();
    c.bench_function("nondominated_sort_200x5", |b| {
        b.iter(|| fast_nondominated_sort(black_box(&points)))
    });
}

criterion_group!(benches, one_generation, sorting);
criterion_main!(benches);
