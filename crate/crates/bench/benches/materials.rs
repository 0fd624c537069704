use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use roomscope_core::dataset::{absorption_labels, room, ConfigId};
use roomscope_core::materials::{surface_impedance, AbsorptionQuadrature};
use roomscope_core::{AirProperties, MaterialSpec};

fn impedance(c: &mut Criterion) {
    let air = AirProperties::default();
    c.bench_function("surface impedance, material A", |b| {
        b.iter(|| surface_impedance(&MaterialSpec::MATERIAL_A, black_box(125.0), &air).unwrap())
    });
}

fn size_corrected(c: &mut Criterion) {
    let air = AirProperties::default();
    let q = AbsorptionQuadrature::default();
    c.bench_function("size-corrected alpha, 4.5 x 2.7 m", |b| {
        b.iter(|| {
            q.size_corrected_alpha(&MaterialSpec::MATERIAL_A, (4.5, 2.7), black_box(125.0), &air)
                .unwrap()
        })
    });
}

fn labels(c: &mut Criterion) {
    let air = AirProperties::default();
    let q = AbsorptionQuadrature::default();
    let geom = room(1).unwrap();
    let m = ConfigId::new(21).unwrap().materials;
    let mut group = c.benchmark_group("labels");
    group.sample_size(10);
    group.bench_function("absorption labels, mixed config", |b| {
        b.iter(|| absorption_labels(&geom, black_box(&m), &air, &q).unwrap())
    });
    group.finish();
}

criterion_group!(benches, impedance, size_corrected, labels);
criterion_main!(benches);
