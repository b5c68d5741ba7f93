use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hdea_core::seed::rng_from_seed;
use hdea_core::{assign_traits, evaluate_nk, evaluate_rbnk, generate_nk, generate_rbn, BitGenome};
use std::hint::black_box;

fn nk_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate_nk");
    let mut rng = rng_from_seed(1);
    for k in [0, 4, 10] {
        let landscape = generate_nk(50, k, 7).unwrap();
        let genome = BitGenome::random(50, &mut rng);
        group.bench_with_input(BenchmarkId::new("n50", k), &k, |b, _| {
            b.iter(|| evaluate_nk(black_box(&landscape), black_box(&genome)).unwrap())
        });
    }
    group.finish();
}

fn rbnk_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate_rbnk");
    for (r, t, trials) in [(40, 20, 5), (100, 50, 10)] {
        let landscape = generate_nk(10, 8, 3).unwrap();
        let traits = assign_traits(r, 10, 3).unwrap();
        let genome = generate_rbn(r, 2, 5).unwrap();
        let mut rng = rng_from_seed(2);
        group.bench_function(BenchmarkId::new(format!("r{r}_t{t}"), trials), |b| {
            b.iter(|| {
                evaluate_rbnk(black_box(&genome), &landscape, &traits, t, trials, &mut rng).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, nk_evaluation, rbnk_evaluation);
criterion_main!(benches);
