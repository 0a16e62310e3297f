use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ncf_core::rscc::{q_kernel_interval, q_step_grid, IntervalUnion};
use ncf_core::{
    apply_transfer, contraction_coefficients, digits, Budget, ContractionConfig, GaussMeasure,
    GridFunction, NcfParams, NcfRscc,
};

fn expansion(c: &mut Criterion) {
    let p = NcfParams::new(2).unwrap();
    c.bench_function("digits_f64_40", |b| {
        b.iter(|| digits(black_box(std::f64::consts::FRAC_1_PI), p, 40))
    });
}

fn measure(c: &mut Criterion) {
    let g = GaussMeasure::new(NcfParams::new(3).unwrap());
    c.bench_function("gn_cdf", |b| b.iter(|| g.cdf(black_box(0.37))));
    c.bench_function("digit_law", |b| b.iter(|| g.digit_law(black_box(17))));
}

fn kernel(c: &mut Criterion) {
    let sys = NcfRscc::new(NcfParams::new(2).unwrap());
    c.bench_function("q_kernel_interval", |b| {
        b.iter(|| q_kernel_interval(&sys, black_box(0.3), black_box(0.01)))
    });
    let target = IntervalUnion::below(0.5).unwrap();
    let budget = Budget::default();
    c.bench_function("q_step_grid_k4_m256", |b| {
        b.iter(|| q_step_grid(&sys, 4, black_box(0.2), &target, 256, &budget))
    });
}

fn transfer(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_transfer");
    group.sample_size(10);
    for m in [256usize, 1024] {
        let f = GridFunction::from_fn(m, |x| x).unwrap();
        let p = NcfParams::new(1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &f, |b, f| {
            b.iter(|| apply_transfer(f, p))
        });
    }
    group.finish();
}

fn contraction(c: &mut Criterion) {
    let sys = NcfRscc::classical();
    let cfg = ContractionConfig {
        k_max: 2,
        grid: 64,
        ..ContractionConfig::default()
    };
    let mut group = c.benchmark_group("contraction");
    group.sample_size(10);
    group.bench_function("grid64_k2", |b| {
        b.iter(|| contraction_coefficients(&sys, &cfg))
    });
    group.finish();
}

criterion_group!(benches, expansion, measure, kernel, transfer, contraction);
criterion_main!(benches);
