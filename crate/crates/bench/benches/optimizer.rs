use criterion::{black_box, criterion_group, criterion_main, Criterion};
use geoflow_bench::{swan_all_pairs, transport_lp};
use geoflow_core::lp::solve;
use geoflow_core::optimizer::Residual;
use geoflow_core::{max_min_mcf, min_cct, ArcMask};

fn lp(c: &mut Criterion) {
    let lp = transport_lp(8, 8);
    c.bench_function("lp_transport_8x8", |b| b.iter(|| solve(black_box(&lp)).unwrap()));
}

fn optimizer(c: &mut Criterion) {
    let (g, demands) = swan_all_pairs();
    let residual = Residual::from_graph(&g);
    let pairs: Vec<_> = demands.iter().map(|d| (d.key.src, d.key.dst)).collect();
    let mask = ArcMask::from_k_paths(&g, pairs, 15);
    c.bench_function("min_cct_swan_20_groups", |b| {
        b.iter(|| min_cct(black_box(&demands), &g, &residual, &mask).unwrap())
    });
    c.bench_function("max_min_mcf_swan_20_groups", |b| {
        b.iter(|| max_min_mcf(black_box(&demands), &g, &residual, &mask).unwrap())
    });
}

criterion_group!(benches, lp, optimizer);
criterion_main!(benches);
