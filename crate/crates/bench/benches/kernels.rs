use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use horoflag::groups::{schottky_group, sym2_schottky, SCHOTTKY_T, SYM2_SCHOTTKY_T};
use horoflag::sampling::{random_flag, random_sl};
use horoflag::{
    cartan_projection, embed_flag, enumerate_ball, exterior_power, svd, BallConfig,
    CompactificationPoint, ShadowSpec, ThetaSubset,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn linear_algebra(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("linalg");
    for d in [2usize, 3, 4, 6] {
        let g = random_sl(d, 3.0, &mut rng);
        group.bench_with_input(BenchmarkId::new("svd", d), &g, |b, g| {
            b.iter(|| svd(black_box(g)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("cartan_projection", d), &g, |b, g| {
            b.iter(|| cartan_projection(black_box(g)).unwrap())
        });
        let k = d / 2;
        group.bench_with_input(BenchmarkId::new("exterior_power_half", d), &g, |b, g| {
            b.iter(|| exterior_power(black_box(g), k).unwrap())
        });
    }
    group.finish();
}

fn orbit(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_ball");
    group.sample_size(10);
    let schottky = schottky_group(SCHOTTKY_T);
    let sym2 = sym2_schottky(SYM2_SCHOTTKY_T);
    for l in [6usize, 8] {
        group.bench_with_input(BenchmarkId::new("schottky", l), &l, |b, &l| {
            b.iter(|| enumerate_ball(&schottky, &BallConfig::new(l)).unwrap().len())
        });
        group.bench_with_input(BenchmarkId::new("sym2_schottky", l), &l, |b, &l| {
            b.iter(|| enumerate_ball(&sym2, &BallConfig::new(l)).unwrap().len())
        });
    }
    group.finish();
}

fn shadows(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut group = c.benchmark_group("shadow_margin");
    for d in [2usize, 3, 4] {
        let th = ThetaSubset::full(d);
        let spec = ShadowSpec::new(random_sl(d, 3.0, &mut rng), 2.0, th.clone()).unwrap();
        let p = CompactificationPoint::Boundary(embed_flag(&random_flag(&th, &mut rng)));
        group.bench_with_input(BenchmarkId::from_parameter(d), &(spec, p), |b, (spec, p)| {
            b.iter(|| spec.margin(black_box(p)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, linear_algebra, orbit, shadows);
criterion_main!(benches);
