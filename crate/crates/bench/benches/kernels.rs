use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ncgtwist_core::cochain::op_b;
use ncgtwist_core::findim::{hermitian_eigen, ComplexMatrix};
use ncgtwist_core::jlo::{jlo_f_exact, jlo_f_quadrature, JloContext, QuadratureOptions};
use ncgtwist_core::rng::named_stream;
use ncgtwist_core::simplex::exp_divided_difference;
use ncgtwist_core::suq2::{eta_invariance, GnsTruncation, Suq2Config, Suq2Model};
use ncgtwist_core::synthetic::{
    random_algebra, random_dirac_triple, random_hermitian, random_invariant_cochain, random_matrix,
    AlgebraKind,
};

fn linear_algebra(c: &mut Criterion) {
    let mut rng = named_stream(1, "bench-eigen");
    let mut group = c.benchmark_group("hermitian_eigen");
    for n in [8usize, 32, 64] {
        let m = random_hermitian(&mut rng, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| hermitian_eigen(black_box(m)).unwrap())
        });
    }
    group.finish();
}

fn divided_differences(c: &mut Criterion) {
    let spread = [0.0, 0.7, 1.9, 3.2, 4.4];
    let clustered = [1.0, 1.0 + 1e-9, 1.0 + 2e-9, 1.2, 1.2 + 1e-7];
    c.bench_function("exp_divided_difference/spread", |b| {
        b.iter(|| exp_divided_difference(black_box(&spread)))
    });
    c.bench_function("exp_divided_difference/clustered", |b| {
        b.iter(|| exp_divided_difference(black_box(&clustered)))
    });
}

fn heat_functional(c: &mut Criterion) {
    let mut rng = named_stream(2, "bench-jlo");
    let (d, r, _) = random_dirac_triple(&mut rng, 8, false, 0.6);
    let ctx = JloContext::from_dirac(&d, &r, None, 1.0).unwrap();
    let mut group = c.benchmark_group("jlo_f");
    for n in [1usize, 2, 3] {
        let args: Vec<ComplexMatrix> = (0..=n).map(|_| random_matrix(&mut rng, 8, 8)).collect();
        group.bench_with_input(BenchmarkId::new("exact", n), &args, |b, args| {
            b.iter(|| jlo_f_exact(&ctx, black_box(args)).unwrap())
        });
        if n <= 2 {
            group.bench_with_input(BenchmarkId::new("quadrature", n), &args, |b, args| {
                b.iter(|| {
                    jlo_f_quadrature(&ctx, black_box(args), &QuadratureOptions::default()).unwrap()
                })
            });
        }
    }
    group.finish();
}

fn boundary(c: &mut Criterion) {
    let mut rng = named_stream(3, "bench-complex");
    let syn = random_algebra(&mut rng, AlgebraKind::Full2).unwrap();
    let mut group = c.benchmark_group("op_b");
    for degree in [1usize, 2, 3] {
        let phi = random_invariant_cochain(&mut rng, &syn, degree).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(degree), &phi, |b, phi| {
            b.iter(|| op_b(&syn.algebra, black_box(phi)).unwrap())
        });
    }
    group.finish();
}

fn suq2(c: &mut Criterion) {
    let mut group = c.benchmark_group("suq2");
    group.sample_size(10);
    for cutoff in [4usize, 6] {
        group.bench_with_input(BenchmarkId::new("gns_build", cutoff), &cutoff, |b, &n| {
            b.iter(|| GnsTruncation::build(0.5, n).unwrap())
        });
    }
    let model = Suq2Model::new(Suq2Config {
        degree_cutoff: 4,
        ..Suq2Config::default()
    })
    .unwrap();
    group.bench_function("eta_invariance/n1", |b| {
        b.iter(|| eta_invariance(&model, &model.r1, 1.0, 1).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    linear_algebra,
    divided_differences,
    heat_functional,
    boundary,
    suq2
);
criterion_main!(benches);
