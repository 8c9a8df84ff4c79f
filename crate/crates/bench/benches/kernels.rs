use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use svlet_bench::{factored, problem};
use svlet_core::spectral::svd;
use svlet_core::sure::{divergence, solve_svlet_spectrum, SureSettings};
use svlet_core::ShrinkageRule;

fn kernels(c: &mut Criterion) {
    let settings = SureSettings::default();
    let mut group = c.benchmark_group("kernels");
    for n in [50, 100, 200] {
        let p = problem(n, n, n / 10, 1.0);
        group.bench_with_input(BenchmarkId::new("svd", n), &p, |b, p| {
            b.iter(|| svd(black_box(p.observed())).unwrap());
        });

        let (p, f) = factored(n, n, n / 10, 1.0);
        let rule = ShrinkageRule::svst(0.5 * f.s[0]).unwrap();
        group.bench_with_input(BenchmarkId::new("divergence", n), &f, |b, f| {
            b.iter(|| divergence(black_box(f.spectrum()), &rule, p.shape()).unwrap());
        });
        for k in [2, 5] {
            group.bench_with_input(
                BenchmarkId::new(format!("svlet_solve_k{k}"), n),
                &f,
                |b, f| {
                    b.iter(|| {
                        solve_svlet_spectrum(
                            black_box(f.spectrum()),
                            p.shape(),
                            p.sigma(),
                            k,
                            10.0,
                            &settings,
                        )
                        .unwrap()
                    });
                },
            );
        }
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
