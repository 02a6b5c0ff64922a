use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use klx_core::montecarlo::{base_kl, sample_norm2, sample_paths, PathLayout};
use klx_core::smallball::predict;
use klx_core::spectral::{nystrom_spectrum, transformed_kl};
use klx_core::{Grid, Kernel, Transform, Weight};

fn bridge(alpha: f64) -> Transform {
    Transform::new(&Kernel::bridge(), &Weight::constant(1.0), alpha).unwrap()
}

fn roots(c: &mut Criterion) {
    let mut g = c.benchmark_group("roots");
    for alpha in [3.0, 12.0] {
        let tr = bridge(alpha);
        g.bench_function(format!("bridge alpha={alpha} 200 terms"), |b| {
            b.iter(|| transformed_kl(black_box(&tr), 200).unwrap())
        });
    }
    let tr = Transform::new(
        &Kernel::wiener(),
        &Weight::parse("poly:t*(1-t)").unwrap(),
        2.0,
    )
    .unwrap();
    g.bench_function("wiener poly alpha=2 50 terms", |b| {
        b.iter(|| transformed_kl(black_box(&tr), 50).unwrap())
    });
    g.finish();
}

fn nystrom(c: &mut Criterion) {
    let mut g = c.benchmark_group("nystrom");
    g.sample_size(10);
    let k = bridge(3.0).transformed_kernel();
    for n in [256, 1000] {
        g.bench_function(format!("grid {n}"), |b| {
            b.iter(|| nystrom_spectrum(black_box(&k), n, 10).unwrap())
        });
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sampling");
    g.sample_size(10);
    let ev = transformed_kl(&bridge(3.0), 200).unwrap().eigenvalues;
    g.bench_function("norm2 1e4 x 200 terms", |b| {
        b.iter(|| sample_norm2(black_box(&ev), 10_000, 1).unwrap())
    });
    let basis = base_kl(&Kernel::bridge(), 200).unwrap();
    let layout = PathLayout::grid(&Grid::gauss_legendre(256));
    g.bench_function("paths 1e3 x 200 terms on 256 nodes", |b| {
        b.iter(|| sample_paths(black_box(&basis), &layout, 1_000, 200, 1).unwrap())
    });
    g.finish();
}

fn constants(c: &mut Criterion) {
    let tr = bridge(5.0);
    c.bench_function("predict bridge alpha=5", |b| {
        b.iter(|| predict(black_box(&tr)).unwrap())
    });
}

criterion_group!(benches, roots, nystrom, sampling, constants);
criterion_main!(benches);
