use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use krylov_core::{
    gen_matrix, gen_rhs, solve, stability_metrics, Domain, Family, Method, SineProblem,
    SolverOptions, SynthSpec,
};

fn synthetic(c: &mut Criterion) {
    let op = gen_matrix(&SynthSpec::new(1000, 800, Family::Psd, 1)).unwrap();
    let b = gen_rhs(1000, 1).unwrap();
    let opts = SolverOptions::default().with_max_iter(200);
    let mut group = c.benchmark_group("synth_d1000_m800");
    for method in [Method::Cg, Method::Cr, Method::Minres] {
        group.bench_with_input(BenchmarkId::from_parameter(method), &method, |bench, &m| {
            bench.iter(|| solve(m, &op, &b, &opts).unwrap())
        });
    }
    group.finish();
}

fn poisson(c: &mut Criterion) {
    let p = SineProblem::new(64, Domain::off_center()).unwrap();
    let opts = SolverOptions::default();
    let mut group = c.benchmark_group("poisson_n64");
    group.sample_size(20);
    for method in [Method::Cr, Method::Minres] {
        group.bench_with_input(BenchmarkId::from_parameter(method), &method, |bench, &m| {
            bench.iter(|| solve(m, &p.op, &p.rhs, &opts).unwrap())
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let op = gen_matrix(&SynthSpec::new(100, 20, Family::Psd, 1)).unwrap();
    let b = gen_rhs(100, 1).unwrap();
    let rep = solve(Method::Cg, &op, &b, &SolverOptions::default().recording()).unwrap();
    c.bench_function("stability_metrics_d100", |bench| {
        bench.iter(|| stability_metrics(&rep, &op).unwrap())
    });
}

criterion_group!(benches, synthetic, poisson, metrics);
criterion_main!(benches);
