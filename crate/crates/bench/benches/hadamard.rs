use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pldpch_core::hadamard::{fwht, HadamardCode, MapDecoder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noisy(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-6.0..6.0)).collect()
}

fn map_decode(c: &mut Criterion) {
    let mut g = c.benchmark_group("map_app");
    for order in [4u32, 6, 8] {
        let code = HadamardCode::new(order).unwrap();
        let n = code.len();
        let lam = noisy(n, order as u64);
        let mut dec = MapDecoder::new(code.clone());
        let mut app = vec![0.0; n];
        g.bench_with_input(BenchmarkId::new("fast", order), &order, |b, _| {
            b.iter(|| dec.app_into(black_box(&lam), &mut app))
        });
        if order <= 6 {
            g.bench_with_input(BenchmarkId::new("reference", order), &order, |b, _| {
                b.iter(|| code.decode_map_reference(black_box(&lam)).unwrap())
            });
        }
    }
    g.finish();
}

fn transform(c: &mut Criterion) {
    let mut v = noisy(1 << 8, 1);
    c.bench_function("fwht_256", |b| b.iter(|| fwht(black_box(&mut v))));
}

criterion_group!(benches, map_decode, transform);
criterion_main!(benches);
