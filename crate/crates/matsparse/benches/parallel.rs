//! Parallel-vs-sequential comparison for the data-parallel inner loops: the
//! Monte Carlo replicate loop and the random multiset search. The parallel
//! side goes through the library (rayon under the `parallel` feature); the
//! sequential baseline runs the same public primitives in a plain loop with
//! the same derived seeds, so both sides do identical numerical work and
//! produce identical numbers.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use matsparse::constructions::{cross_polytope, log_needed_construction};
use matsparse::multiset::Multiset;
use matsparse::sampling::{derive_seed, draw_multiset, rng_from_seed, rudelson_experiment, sample_error};
use matsparse::verifiers::{diagonal_sample_error, min_error_over_multisets, SearchMode};
use rand::Rng;

fn bench_replicates(c: &mut Criterion) {
    let mut group = c.benchmark_group("rudelson_replicates");
    group.sample_size(10);
    for &dim in &[16usize, 32] {
        let dec = cross_polytope(dim);
        let k = 40 * dim;
        let replicates = 64;
        let seed = 7u64;

        group.bench_with_input(BenchmarkId::new("parallel", dim), &dim, |b, _| {
            b.iter(|| rudelson_experiment(&dec, k, replicates, seed).unwrap().mean)
        });
        group.bench_with_input(BenchmarkId::new("sequential", dim), &dim, |b, _| {
            b.iter(|| {
                let mut acc = 0.0;
                for r in 0..replicates {
                    let mut rng = rng_from_seed(derive_seed(seed, r as u64));
                    let sigma = draw_multiset(dec.weights(), k, &mut rng).unwrap();
                    acc += sample_error(&dec, &sigma).unwrap();
                }
                acc / replicates as f64
            })
        });
    }
    group.finish();
}

fn bench_multiset_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("random_multiset_search");
    group.sample_size(10);
    let inst = log_needed_construction(64, 8.0, 1.0 / 64.0).unwrap();
    let samples = 20_000usize;
    let seed = 11u64;

    group.bench_function("parallel", |b| {
        b.iter(|| {
            min_error_over_multisets(&inst, SearchMode::Random { samples, seed }).min_error
        })
    });
    group.bench_function("sequential", |b| {
        let n = inst.member_count();
        let bound = inst.size_bound().floor() as usize;
        let diags: Vec<Vec<f64>> = (0..n).map(|i| inst.diag(i)).collect();
        b.iter(|| {
            let mut best = f64::INFINITY;
            for i in 0..samples {
                let mut rng = rng_from_seed(derive_seed(seed, i as u64));
                let s = rng.gen_range(1..=bound);
                let draws: Vec<usize> = (0..s).map(|_| rng.gen_range(0..n)).collect();
                let sigma = Multiset::from_draws(&draws).unwrap();
                best = best.min(diagonal_sample_error(&diags, inst.dim(), &sigma));
            }
            best
        })
    });
    group.finish();
}

criterion_group!(benches, bench_replicates, bench_multiset_search);
criterion_main!(benches);
