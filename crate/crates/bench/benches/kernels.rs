use branchlink::estimator::{estimate_path_tvd, ProcessPair, Side};
use branchlink::kernels::attainable_set;
use branchlink::rng;
use branchlink::{ControlMap, Distribution, KernelOptions, OffspringFamily, ProcessSpec, SumOptions, TransitionKernel};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn uncached() -> KernelOptions {
    KernelOptions { cache_capacity: 0, ..KernelOptions::default() }
}

fn kernel_rows(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_row");
    let (psdbp, cbp) = ProcessSpec::logistic_pair(3.0, 2, 100.0).unwrap();
    for (name, spec) in [("nb_logistic", psdbp), ("binomial_control", cbp)] {
        let kernel = TransitionKernel::new(spec, uncached());
        for z in [10u64, 100, 1000] {
            group.bench_with_input(BenchmarkId::new(name, z), &z, |b, &z| b.iter(|| kernel.row(black_box(z)).unwrap()));
        }
    }
    group.finish();
}

fn iid_sums(c: &mut Criterion) {
    let mut group = c.benchmark_group("iid_sum");
    let law = Distribution::FiniteSupport(Distribution::zero_inflated_poisson(2.0 / 3.0, 3.0).unwrap().to_finite(1e-14));
    for n in [10u64, 100, 1000] {
        group.bench_with_input(BenchmarkId::new("dense_zip", n), &n, |b, &n| {
            b.iter(|| law.iid_sum(black_box(n), SumOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let (psdbp, cbp) = ProcessSpec::logistic_pair(3.0, 2, 100.0).unwrap();
    let mut group = c.benchmark_group("sample_step");
    for (name, spec) in [("nb_logistic", psdbp), ("binomial_control", cbp)] {
        let kernel = TransitionKernel::new(spec, KernelOptions::default());
        let mut r = rng::stream(1, 0);
        group.bench_function(name, |b| b.iter(|| kernel.sample_step(black_box(100), &mut r).unwrap()));
    }
    group.finish();
}

fn attainable(c: &mut Criterion) {
    let kernel = TransitionKernel::new(
        ProcessSpec::dcbp(ControlMap::MaxShift { c: 1 }, Distribution::binomial(2, 0.5).unwrap()),
        KernelOptions::default(),
    );
    c.bench_function("attainable_set_cap_1000", |b| b.iter(|| attainable_set(&kernel, 1, black_box(1000)).unwrap()));
}

fn estimator(c: &mut Criterion) {
    let opts = KernelOptions::default();
    let pair = ProcessPair::new(
        TransitionKernel::new(ProcessSpec::psdbp(OffspringFamily::NbShiftGated { lambda: 3.0, m: 2 }), opts),
        TransitionKernel::new(
            ProcessSpec::dcbp(ControlMap::ShiftGated { m: 2 }, Distribution::zero_inflated_poisson(2.0 / 3.0, 3.0).unwrap()),
            opts,
        ),
    );
    let mut group = c.benchmark_group("path_tvd");
    group.sample_size(10);
    for k in [1u32, 5] {
        group.bench_with_input(BenchmarkId::new("n10000", k), &k, |b, &k| {
            b.iter(|| estimate_path_tvd(&pair, 50, k, 10_000, 3, Side::Psdbp, 1).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernel_rows, iid_sums, sampling, attainable, estimator);
criterion_main!(benches);
