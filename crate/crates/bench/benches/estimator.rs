use aosa_bench::spread_positions;
use aosa_core::bounds::{noncoherent_pe, zzb_directional, zzb_profile, ZzbOptions};
use aosa_core::estimation::{make_scenario, nomp, synthesize, trial_rng, SteeringDictionary};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn estimator_benches(c: &mut Criterion) {
    let positions = spread_positions();
    let dict = SteeringDictionary::covering_disc(&positions, 0.5, 0.0277).unwrap();
    let mut rng = trial_rng(1, 0);
    let truth = make_scenario(5, true, 0.16, 0.0, 0.5, &mut rng).unwrap();
    let snap = synthesize(&truth, 0.5, &positions, &mut rng);

    c.bench_function("nomp_k5", |b| {
        b.iter(|| nomp(black_box(&snap.x), &positions, &dict, 5, 3).unwrap())
    });

    c.bench_function("marcum_pe", |b| {
        b.iter(|| noncoherent_pe(black_box(1280.0), black_box(0.7)))
    });

    let profile = zzb_profile(&positions, [1.0, 0.0], &ZzbOptions::default());
    c.bench_function("zzb_directional_from_profile", |b| {
        b.iter(|| zzb_directional(black_box(&profile), 1280.0))
    });
}

criterion_group!(benches, estimator_benches);
criterion_main!(benches);
