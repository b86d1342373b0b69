use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

use quakeml_core::rng::rng_from_seed;
use quakeml_core::{
    chi_square_quantile, classify, epicentral_distance, estimate_hypocenter,
    hypocentral_distance, EarthModel, EstimatorConfig, GeoPoint, Hypocenter, TestSpec, Trigger,
    WaveSpeed,
};

fn triggers(n: usize, seed: u64) -> Vec<Trigger> {
    let mut rng = rng_from_seed(seed);
    let h = Hypocenter::new(-12.0, -76.9, 30.0).unwrap();
    let earth = EarthModel::default();
    (0..n)
        .map(|_| {
            let p = GeoPoint::new(
                rng.random_range(-12.3..-11.8),
                rng.random_range(-77.1..-76.7),
            )
            .unwrap();
            let d = epicentral_distance(h.epicentre, p, earth).unwrap();
            let t = hypocentral_distance(d, h.depth_km, earth).unwrap() / 7.8;
            Trigger::new(p, t + rng.random_range(-1.0..1.0))
        })
        .collect()
}

fn bench_estimate(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_hypocenter");
    let cfg = EstimatorConfig::default();
    for n in [21usize, 108] {
        let trig = triggers(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &trig, |b, t| {
            b.iter(|| estimate_hypocenter(black_box(t), WaveSpeed::primary(), &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_classify(c: &mut Criterion) {
    let trig = triggers(108, 2);
    let cfg = EstimatorConfig::default();
    c.bench_function("classify_108", |b| {
        b.iter(|| classify(black_box(&trig), &TestSpec::default(), &cfg).unwrap())
    });
}

fn bench_quantile(c: &mut Criterion) {
    c.bench_function("chi_square_quantile_0.99_105", |b| {
        b.iter(|| chi_square_quantile(black_box(0.99), black_box(105)).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_estimate, bench_classify, bench_quantile
}
criterion_main!(benches);
