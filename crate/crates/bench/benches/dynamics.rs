use attnflow_core::geometry::{hull2d, limiting_polytope, maximal_alignment_set, points_of};
use attnflow_core::lyapunov::{backward_aps, ProbabilityVector};
use attnflow_core::scenario::Preset;
use attnflow_core::{localmax_step, Retention};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn bench_step(c: &mut Criterion) {
    let config = Preset::Figure2Localmax.config();
    let params = config.params().unwrap();
    let x = config.initial().unwrap();
    c.bench_function("localmax_step", |b| {
        b.iter(|| localmax_step(black_box(&x), &params, 0.1).unwrap())
    });
}

fn bench_geometry(c: &mut Criterion) {
    let trajectory = Preset::Figure2Localmax.config().run().unwrap();
    let points = points_of(trajectory.initial()).unwrap();
    c.bench_function("hull2d", |b| b.iter(|| hull2d(black_box(&points)).unwrap()));
    let k = limiting_polytope(trajectory.last(), 1e-6).unwrap();
    c.bench_function("maximal_alignment_set", |b| {
        b.iter(|| maximal_alignment_set(black_box(&k), 1e-9).unwrap())
    });
}

fn bench_aps(c: &mut Criterion) {
    let trajectory = Preset::Figure2Localmax
        .config()
        .with_retention(Retention::ALL)
        .run()
        .unwrap();
    let chain = trajectory.matrix_chain().unwrap();
    let terminal = ProbabilityVector::uniform(trajectory.n()).unwrap();
    c.bench_function("backward_aps", |b| {
        b.iter(|| backward_aps(black_box(chain), terminal.clone()).unwrap())
    });
}

criterion_group!(benches, bench_step, bench_geometry, bench_aps);
criterion_main!(benches);
