use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use modquot::defsub::{enumerate_classes, DefiningContext, EnumerationConfig};
use modquot::freegrp::FreeWord;
use modquot::permgrp::{PermGroup, Permutation};
use modquot::psl2::{Prime, Psl2Group};
use modquot::surface::SurfaceGroup;

fn psl2(c: &mut Criterion) {
    let group = Psl2Group::new(Prime::new(13).unwrap());
    let n = group.order() as u32;
    c.bench_function("psl2_mul_table_p13", |b| {
        b.iter(|| (0..n).fold(0, |acc, x| group.mul(acc, black_box(x))))
    });
    let (x, y) = (*group.element(5), *group.element(700));
    c.bench_function("psl2_matrix_mul", |b| b.iter(|| black_box(x).mul(&black_box(y)).unwrap()));
}

fn defsub(c: &mut Criterion) {
    let ctx = DefiningContext::new(7).unwrap();
    let t = [3, 90, 141];
    c.bench_function("canonical_rank3_p7", |b| b.iter(|| ctx.canonical_unchecked(black_box(&t))));
    let ctx5 = DefiningContext::new(5).unwrap();
    c.bench_function("enumerate_rank2_p5", |b| {
        b.iter(|| enumerate_classes(&ctx5, 2, &EnumerationConfig::default()).unwrap())
    });
}

fn permgrp(c: &mut Criterion) {
    let n = 60;
    let cycle = Permutation::new((0..n as u32).map(|i| (i + 1) % n as u32).collect()).unwrap();
    let swap = Permutation::from_cycles(n, &[&[0, 1]]).unwrap();
    let mut group = c.benchmark_group("schreier_sims");
    group.sample_size(10);
    group.bench_function("sym60", |b| b.iter(|| PermGroup::new(n, vec![cycle.clone(), swap.clone()]).unwrap().order()));
    group.finish();
}

fn dehn(c: &mut Criterion) {
    let s = SurfaceGroup::new(3).unwrap();
    let u = FreeWord::parse(6, "x1.x4.X2.x6.x5").unwrap();
    let w = s.relator().conjugate_by(&u).unwrap().mul(&s.relator().inverse()).unwrap();
    c.bench_function("dehn_genus3", |b| b.iter(|| s.is_trivial(black_box(&w)).unwrap()));
}

criterion_group!(benches, psl2, defsub, permgrp, dehn);
criterion_main!(benches);
