use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use quakeml_core::rng::child_rng;
use quakeml_core::simulate::{generate_network, true_event_stream, NetworkSpec, TrueEventSpec};
use quakeml_core::{detect, DetectorConfig, StreamingDetector};

fn bench_detector(c: &mut Criterion) {
    let network = generate_network(&NetworkSpec::default(), &mut child_rng(3, 0, 0)).unwrap();
    let (stream, _) =
        true_event_stream(&network, &TrueEventSpec::default(), &mut child_rng(3, 1, 0)).unwrap();
    let cfg = DetectorConfig::default();

    c.bench_function("detect_batch_lima", |b| {
        b.iter(|| detect(black_box(&stream), &network, &cfg).unwrap())
    });
    c.bench_function("detect_streaming_lima", |b| {
        b.iter(|| {
            StreamingDetector::new(&network, cfg)
                .unwrap()
                .run(black_box(&stream).iter().cloned())
                .unwrap()
        })
    });
}

criterion_group!(benches, bench_detector);
criterion_main!(benches);
