use criterion::{criterion_group, criterion_main, Criterion};
use flexcone::conemanifold::{
    assemble, builtin_schema, manifold_flex_check, meridian_cover_search, prism_meridian_system, SchemaKind,
};
use flexcone::deaverage::cone_angle_triple;
use flexcone::generators::{hyperideal_schonhardt, schonhardt, symmetric_schonhardt_flex, SchonhardtParams};
use flexcone::hyperideal::{min_tube_distance, truncate};
use flexcone::rigidity::{flex_analysis, DEFAULT_KERNEL_TOL};
use flexcone::{Ambient, Model};
use std::hint::black_box;

fn kernels(c: &mut Criterion) {
    let params = SchonhardtParams::flexible(1.0, 1.0).unwrap();
    let e = schonhardt(&params).unwrap();
    let h = hyperideal_schonhardt(&params, 0.95).unwrap();
    let t = truncate(&h).unwrap();
    let four = builtin_schema(SchemaKind::FourComp, &h).unwrap();
    let flex = symmetric_schonhardt_flex(&h.reinterpret(Model::Euclidean).unwrap(), &params).unwrap();
    let system = prism_meridian_system();

    c.bench_function("flex_analysis euclidean", |b| {
        b.iter(|| flex_analysis(black_box(&e), Ambient::Euclidean, DEFAULT_KERNEL_TOL).unwrap())
    });
    c.bench_function("flex_analysis de sitter", |b| {
        b.iter(|| flex_analysis(black_box(&h), Ambient::Minkowski, DEFAULT_KERNEL_TOL).unwrap())
    });
    c.bench_function("truncate", |b| b.iter(|| truncate(black_box(&h)).unwrap()));
    c.bench_function("min_tube_distance", |b| b.iter(|| min_tube_distance(black_box(&t)).unwrap()));
    c.bench_function("assemble four_comp", |b| b.iter(|| assemble(black_box(&four)).unwrap()));
    c.bench_function("manifold_flex_check four_comp", |b| {
        b.iter(|| manifold_flex_check(black_box(&four), &flex, 1e-4).unwrap())
    });
    c.bench_function("cone_angle_triple", |b| b.iter(|| cone_angle_triple(1, black_box(0.01), 1.0, 1.0).unwrap()));
    c.bench_function("meridian_cover_search n=7", |b| b.iter(|| meridian_cover_search(black_box(&system), 7).unwrap()));
}

criterion_group!(benches, kernels);
criterion_main!(benches);
