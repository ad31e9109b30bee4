use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use intertwine::diffop::Func;
use intertwine::jet::C64;
use intertwine::models::Model;
use intertwine::operators::RelationSpec;
use intertwine::oracle::{fd_eigensolve, GridConfig};
use intertwine::specfun::{eval_poly, PolyFamily};
use intertwine::verify::{check_mapping, check_relation_identity, TestFamily};

fn polynomials(c: &mut Criterion) {
    let fam = PolyFamily::jacobi(10, C64::new(-11.5, 0.7), C64::new(-11.5, -0.7));
    let z = C64::new(0.0, 1.3);
    c.bench_function("jacobi_n10_complex", |b| {
        b.iter(|| eval_poly(black_box(&fam), black_box(z)))
    });
}

fn eigenfunctions(c: &mut Criterion) {
    let m = Model::rosen_morse_spherical(2.0, 0.0).unwrap();
    let psi = m.eigenfunction(6).unwrap();
    c.bench_function("rm_sph_psi6_jet2", |b| {
        b.iter(|| psi.jet(black_box(1.1), 2).unwrap())
    });
}

fn relations(c: &mut Criterion) {
    let h = Model::hydrogen(1.0, 1.0, 0).unwrap();
    let spec = RelationSpec::spectral(&h, 2).unwrap();
    let tf = TestFamily::for_relation(&spec, 4, 0).unwrap();
    c.bench_function("hydrogen_relation_n2", |b| {
        b.iter(|| check_relation_identity(&spec, &tf, 1e-8).unwrap())
    });
    c.bench_function("hydrogen_mapping_n2", |b| {
        b.iter(|| check_mapping(&h, black_box(2)).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let m = Model::harmonic_oscillator(1.0, 1.0).unwrap();
    let cfg = GridConfig::default();
    c.bench_function("fd_oscillator_k4", |b| {
        b.iter(|| fd_eigensolve(&m, 4, &cfg).unwrap())
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = polynomials, eigenfunctions, relations, oracle
}
criterion_main!(kernels);
