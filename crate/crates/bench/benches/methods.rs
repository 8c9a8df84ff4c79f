//! End-to-end denoising time per method on 50x50 matrices, SVD included.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use svlet_bench::problem;
use svlet_core::harness::Method;
use svlet_core::sure::SureSettings;

fn denoise_50x50(c: &mut Criterion) {
    let settings = SureSettings::default();
    let methods = [
        Method::svlet_default(),
        Method::SvstSure,
        Method::AtnSure,
        Method::SvltSure,
        Method::OptimalShrink,
    ];
    let mut group = c.benchmark_group("denoise_50x50");
    for r in [2, 25] {
        let p = problem(50, 50, r, 1.0);
        for method in &methods {
            group.bench_with_input(BenchmarkId::new(method.to_string(), r), &p, |b, p| {
                b.iter(|| method.denoise(black_box(p), r, &settings).unwrap());
            });
        }
    }
    group.finish();
}

criterion_group!(benches, denoise_50x50);
criterion_main!(benches);
