use criterion::{criterion_group, criterion_main, Criterion};
use geoflow::connections::{christoffel, foliation_diagnostics};
use geoflow::exponential::{exp_r, exp_sr, factorization_at};
use geoflow::flows::{flow, FlowConfig};
use geoflow::models::{heisenberg, hopf_s3, octonionic_hopf};
use geoflow::sampling::diagnostic_points;
use geoflow::{CotangentVec, Hamiltonian, Tolerances};
use std::hint::black_box;

fn flows(c: &mut Criterion) {
    let cfg = FlowConfig::default();
    let h = heisenberg();
    let s3 = hopf_s3();
    let st = CotangentVec::new(h.canonical.x.clone(), h.canonical.p.clone());
    c.bench_function("heisenberg H^h flow t=1", |b| {
        b.iter(|| flow(&h.geometry, Hamiltonian::H, black_box(&st), 1.0, &cfg).unwrap())
    });
    c.bench_function("hopf_s3 exp_sr t=1", |b| {
        b.iter(|| exp_sr(&s3.geometry, &s3.canonical.x, black_box(&s3.canonical.p), 1.0, &cfg).unwrap())
    });
    let v = vec![0.3, -0.2, 0.5];
    c.bench_function("hopf_s3 exp_r with transport t=1", |b| {
        b.iter(|| exp_r(&s3.geometry, &s3.canonical.x, black_box(&v), 1.0, std::slice::from_ref(&v), &cfg, false).unwrap())
    });
    c.bench_function("hopf_s3 factorization t=1", |b| {
        b.iter(|| factorization_at(&s3.geometry, &s3.canonical.x, &s3.canonical.p, 1.0, &cfg).unwrap())
    });
}

fn pointwise(c: &mut Criterion) {
    let s3 = hopf_s3();
    let oct = octonionic_hopf();
    c.bench_function("hopf_s3 christoffel", |b| b.iter(|| christoffel(&s3.geometry, black_box(&s3.canonical.x)).unwrap()));
    c.bench_function("octonionic christoffel", |b| b.iter(|| christoffel(&oct.geometry, black_box(&oct.canonical.x)).unwrap()));
    let pts = diagnostic_points(&s3, 10);
    let tol = Tolerances::default();
    c.bench_function("hopf_s3 foliation diagnostics x10", |b| b.iter(|| foliation_diagnostics(&s3, black_box(&pts), &tol).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = flows, pointwise
}
criterion_main!(benches);
