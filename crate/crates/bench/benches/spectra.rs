use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use euler_spectra::contfrac::f_eigen;
use euler_spectra::euler_core::euler_rhs;
use euler_spectra::matrixop::{build, Resolvent};
use euler_spectra::{find_eigenvalues, truncated_spectrum, CFParams, Complex64, FindOptions, ModeSet, OperatorKind, VorticityField, WaveVector};

fn golden() -> CFParams {
    CFParams::new(WaveVector::new(1, 0), WaveVector::new(1, 1), Complex64::new(1.0, 0.0)).unwrap()
}

fn continued_fraction(c: &mut Criterion) {
    let p = golden();
    let z = Complex64::new(0.25, 0.35);
    c.bench_function("f_eigen golden", |b| b.iter(|| f_eigen(&p, black_box(z), 1e-14).unwrap()));
    let mut g = c.benchmark_group("search");
    g.sample_size(10);
    g.bench_function("find_eigenvalues golden", |b| {
        b.iter(|| find_eigenvalues(&p, &FindOptions::default()).unwrap())
    });
    g.finish();
}

fn finite_section(c: &mut Criterion) {
    let op = build(OperatorKind::A, &golden(), 200).unwrap();
    let mut g = c.benchmark_group("section");
    g.sample_size(10);
    g.bench_function("truncated_spectrum N=200", |b| b.iter(|| truncated_spectrum(black_box(&op)).unwrap()));
    g.finish();
}

fn resolvent(c: &mut Criterion) {
    let r = Resolvent::new(Complex64::new(3.0, 1.0)).unwrap();
    let y: Vec<Complex64> = (0..20).map(|j| Complex64::new(j as f64, 1.0)).collect();
    c.bench_function("resolvent apply, 20-term y", |b| b.iter(|| r.apply(black_box(&y))));
}

fn nonlinear(c: &mut Criterion) {
    let modes = ModeSet::new(8.0).unwrap();
    let f = VorticityField::random(&modes, 1, 1.0);
    c.bench_function("euler_rhs K=8", |b| b.iter(|| euler_rhs(black_box(&f))));
}

criterion_group!(benches, continued_fraction, finite_section, resolvent, nonlinear);
criterion_main!(benches);
