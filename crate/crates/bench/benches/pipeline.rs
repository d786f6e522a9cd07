use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ttmdl_bench::desk_cube;
use ttmdl_core::decomp::{cpd_als_with, cpd_to_tt, tt_mdl, tt_recompress, AlsOptions};
use ttmdl_core::estimate::{estimate_stage, smooth_stage, SmoothingPlan};
use ttmdl_core::harness::{fft_estimate, rd_profile};

fn stages(c: &mut Criterion) {
    let (sc, y) = desk_cube(0.0);
    let plan = SmoothingPlan::new(vec![2; 4]).unwrap();
    let (yfb, _) = smooth_stage(&y, &plan).unwrap();

    let mut g = c.benchmark_group("desk");
    g.bench_function("denoise/tt_mdl", |b| b.iter(|| tt_mdl(black_box(&y)).unwrap()));
    g.bench_function("smooth/ss_fba", |b| b.iter(|| smooth_stage(black_box(&y), &plan).unwrap()));
    g.bench_function("estimate/esprit", |b| b.iter(|| estimate_stage(black_box(&yfb), &sc.radar, 2).unwrap()));
    g.bench_function("estimate/fft", |b| b.iter(|| fft_estimate(black_box(&y), &sc.radar, 2).unwrap()));
    g.bench_function("profile/range_doppler", |b| b.iter(|| rd_profile(black_box(&y)).unwrap()));
    g.finish();
}

fn baselines(c: &mut Criterion) {
    let (_, y) = desk_cube(0.0);
    let opts = AlsOptions { max_iters: 50, tol: 1e-8, restarts: 1 };
    let mut g = c.benchmark_group("desk_cpd");
    g.sample_size(10);
    g.bench_function("als_rank2", |b| b.iter(|| cpd_als_with(black_box(&y), 2, &opts, 0).unwrap()));
    g.bench_function("als_rank3_recompress", |b| {
        b.iter(|| {
            let fit = cpd_als_with(black_box(&y), 3, &opts, 0).unwrap();
            tt_recompress(&cpd_to_tt(&fit.model).unwrap(), 0.1).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, stages, baselines);
criterion_main!(benches);
