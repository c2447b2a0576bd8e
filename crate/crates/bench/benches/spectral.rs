use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use superliouville::branch_solver::{killing_branch, BranchPoint, KILLING_PHASE};
use superliouville::functional::{el_residual, eval_j};
use superliouville::nehari::weighted_eigensystem;
use superliouville::{BandLimit, DiracBasis, ScalarField};

fn spectral(c: &mut Criterion) {
    let band = BandLimit::new(16).unwrap();
    c.bench_function("dirac_basis_l16", |b| b.iter(|| DiracBasis::assemble(black_box(band)).unwrap()));

    let basis = DiracBasis::assemble(band).unwrap();
    let u = ScalarField::coordinate(16, 2) * 0.3;
    c.bench_function("weighted_eigensystem_l16", |b| b.iter(|| weighted_eigensystem(&basis, black_box(&u)).unwrap()));

    let s = killing_branch(&basis, 1.5, KILLING_PHASE).unwrap();
    c.bench_function("eval_j_l16", |b| b.iter(|| eval_j(black_box(&s))));
    c.bench_function("el_residual_l16", |b| b.iter(|| el_residual(black_box(&s))));

    let mut slow = c.benchmark_group("slow");
    slow.sample_size(10);
    slow.bench_function("assess_killing_l16", |b| b.iter(|| BranchPoint::assess(black_box(s.clone())).unwrap()));
    slow.finish();
}

criterion_group!(benches, spectral);
criterion_main!(benches);
