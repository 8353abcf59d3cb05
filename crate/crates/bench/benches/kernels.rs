use std::hint::black_box;

use corrdyn::catalog;
use corrdyn::equilibrium::{brolin_sample, grid_density, mixing_series, preimage_tree, BBox, SamplerConfig};
use corrdyn::exceptional::find_e0;
use corrdyn::periodic::periodic_points;
use corrdyn::uniqueness::{factor_compose, preimage_equal, CompactSet};
use corrdyn::{Complex64, UniPoly};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn fibers(c: &mut Criterion) {
    let mut group = c.benchmark_group("fiber");
    let z = Complex64::new(0.3, -0.7);
    for f in [catalog::e1(), catalog::e2(), catalog::cusp()] {
        let name = f.name().unwrap_or("unnamed").to_string();
        group.bench_function(BenchmarkId::new("preimages", &name), |b| b.iter(|| f.preimages(black_box(z)).unwrap()));
        group.bench_function(BenchmarkId::new("images", &name), |b| b.iter(|| f.images(black_box(z)).unwrap()));
    }
    group.finish();
}

fn measures(c: &mut Criterion) {
    let mut group = c.benchmark_group("measure");
    group.sample_size(10);
    let e2 = catalog::e2();
    let cfg = SamplerConfig {
        n_samples: 10_000,
        ..SamplerConfig::with_seed(1)
    };
    group.bench_function("brolin_sample/e2/10k", |b| b.iter(|| brolin_sample(&e2, black_box(&cfg)).unwrap()));
    for depth in [4, 6] {
        group.bench_with_input(BenchmarkId::new("preimage_tree/e2", depth), &depth, |b, &n| {
            b.iter(|| preimage_tree(&e2, Complex64::new(0.5, 0.5), n).unwrap())
        });
    }
    let mu = brolin_sample(&e2, &cfg).unwrap();
    let bbox = BBox::covering(&[&mu]);
    group.bench_function("grid_density/256", |b| b.iter(|| grid_density(&mu, bbox, 256, 256).unwrap()));
    group.bench_function("mixing_series/e2/n3", |b| {
        b.iter(|| mixing_series(&e2, &mu, |z: Complex64| z.re, |z: Complex64| z.re, 3).unwrap())
    });
    group.finish();
}

fn periodic(c: &mut Criterion) {
    let mut group = c.benchmark_group("periodic");
    group.sample_size(10);
    for (f, n_max) in [(catalog::e1(), 6), (catalog::e2(), 4)] {
        let name = f.name().unwrap_or("unnamed").to_string();
        for n in [2, n_max] {
            group.bench_with_input(BenchmarkId::new(name.clone(), n), &n, |b, &n| b.iter(|| periodic_points(&f, n).unwrap()));
        }
    }
    group.finish();
}

fn sets(c: &mut Criterion) {
    let mut group = c.benchmark_group("sets");
    group.sample_size(10);
    let e2 = catalog::e2();
    group.bench_function("find_e0/e2", |b| b.iter(|| find_e0(&e2, 16).unwrap()));
    let t3 = UniPoly::from_real(&[0.0, -3.0, 0.0, 4.0]);
    let k = CompactSet::segment(200).unwrap();
    group.bench_function("preimage_equal/t3/segment", |b| b.iter(|| preimage_equal(&t3, &t3, &k, None).unwrap()));
    let q = UniPoly::from_real(&[0.3, 0.0, 1.0]);
    let p = UniPoly::from_real(&[-1.0, 0.0, 1.0]);
    let f = p.compose(&q);
    group.bench_function("factor_compose/deg4", |b| b.iter(|| factor_compose(black_box(&f), &q)));
    group.finish();
}

criterion_group!(benches, fibers, measures, periodic, sets);
criterion_main!(benches);
