use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hardedge::dynamics::{integrate_single, pde_residuals, state_from_fredholm, OdeOptions};
use hardedge::fredholm::{build_nystrom, DEFAULT_ORDER};
use hardedge::montecarlo::{sample_squared_singular_values, EnsembleSpec};
use hardedge::{IntervalUnion, Kernel, ModelParams};
use hardedge_bench::{parameter_sets, s_grid, two_intervals};
use std::hint::black_box;

fn kernel(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel");
    for (name, p) in parameter_sets() {
        let k = Kernel::new(&p);
        g.bench_with_input(BenchmarkId::new("bilinear", name), &k, |b, k| {
            b.iter(|| k.bilinear(black_box(2.5), black_box(7.0)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("integral", name), &k, |b, k| {
            b.iter(|| k.integral(black_box(2.5), black_box(7.0)).unwrap())
        });
    }
    g.finish();
}

fn fredholm(c: &mut Criterion) {
    let mut g = c.benchmark_group("fredholm");
    g.sample_size(20);
    let iv = IntervalUnion::single(10.0).unwrap();
    for (name, p) in parameter_sets() {
        g.bench_with_input(BenchmarkId::new("determinant_s10", name), &p, |b, p| {
            b.iter(|| build_nystrom(p, &iv, DEFAULT_ORDER).unwrap().determinant())
        });
        g.bench_with_input(BenchmarkId::new("state_two_intervals", name), &p, |b, p| {
            b.iter(|| state_from_fredholm(p, &two_intervals(), DEFAULT_ORDER).unwrap())
        });
    }
    g.finish();
}

fn dynamics(c: &mut Criterion) {
    let mut g = c.benchmark_group("dynamics");
    g.sample_size(10);
    let s = s_grid();
    for (name, p) in parameter_sets() {
        g.bench_with_input(BenchmarkId::new("ode_to_10", name), &p, |b, p| {
            b.iter(|| integrate_single(p, &s, &OdeOptions::default()).unwrap())
        });
    }
    let p = ModelParams::new(vec![1.0, 2.0]).unwrap();
    g.bench_function("pde_residuals_M2", |b| {
        b.iter(|| pde_residuals(&p, &two_intervals(), DEFAULT_ORDER, 1e-3).unwrap())
    });
    g.finish();
}

fn montecarlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("montecarlo");
    for n0 in [25, 100] {
        let spec = EnsembleSpec::new(n0, ModelParams::new(vec![0.0, 0.0]).unwrap(), 1, 1).unwrap();
        g.bench_with_input(BenchmarkId::new("trial_M2", n0), &spec, |b, spec| {
            let mut t = 0u64;
            b.iter(|| {
                t += 1;
                sample_squared_singular_values(spec, t).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, kernel, fredholm, dynamics, montecarlo);
criterion_main!(benches);
