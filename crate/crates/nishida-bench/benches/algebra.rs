use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nishida::opcalc::{default_ambient, Calculus, FormalClass};
use nishida::realize::thm_nneq_certificate;
use nishida::steenrod::{Gen, SteenrodAlgebra};
use nishida::Prime;

fn adem(c: &mut Criterion) {
    let p = Prime::new(3).unwrap();
    c.bench_function("adem P^9 P^18 fresh", |b| {
        b.iter(|| SteenrodAlgebra::new(p).adem_reduce(black_box(&[Gen::P(9), Gen::P(18)])))
    });
    let alg = SteenrodAlgebra::new(p);
    c.bench_function("adem P^5 b P^7 P^2 memoised", |b| {
        b.iter(|| alg.adem_reduce(black_box(&[Gen::P(5), Gen::Beta, Gen::P(7), Gen::P(2)])))
    });
    c.bench_function("subalgebra lemma p=3 k=2", |b| {
        b.iter(|| SteenrodAlgebra::new(p).verify_subalg_lemma(black_box(2)).unwrap())
    });
}

fn nishida(c: &mut Criterion) {
    let p = Prime::new(3).unwrap();
    let alg = SteenrodAlgebra::new(p);
    let calc = Calculus::new(&alg, default_ambient(3, 6, 0));
    let x = FormalClass::cohomology("x", 4, 1);
    c.bench_function("nishida expand s=6 r=0", |b| {
        b.iter(|| calc.nishida_expand_coh(black_box(6), 0, &x, None).unwrap())
    });
    let calc = Calculus::new(&alg, default_ambient(3, 3, 2));
    c.bench_function("nishida pairing check s=3 r=2 |x|=4", |b| {
        b.iter(|| calc.verify_nishida_by_pairing(black_box(3), 2, 4).unwrap())
    });
}

fn certificate(c: &mut Criterion) {
    let p = Prime::new(3).unwrap();
    let mut group = c.benchmark_group("certificate");
    group.sample_size(10);
    group
        .bench_function("green at (3; 2, 6, 1, 0) k=4", |b| b.iter(|| thm_nneq_certificate(p, 4, 2, 6, 1, 0).unwrap()));
    group.finish();
}

criterion_group!(benches, adem, nishida, certificate);
criterion_main!(benches);
