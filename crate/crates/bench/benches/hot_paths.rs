//! Hot-path benchmarks: the 3-d transform, the density functional, frame
//! simulation, and the surface statistic.  Sizes are chosen so one run of
//! the full suite stays under a minute.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use nru_core::detector::{
    analyze_stack, simulate_frames, ExperimentConfig, Psf, ResolutionConvention,
};
use nru_core::functionals::noise_resolution_functional;
use nru_core::grid::GridField;
use nru_core::modes::ModeSpec;

fn gaussian_field_3d(n: usize) -> GridField {
    GridField::from_fn(3, 6.0, n, |r| {
        (-r.iter().map(|x| x * x).sum::<f64>() / 2.0).exp()
    })
    .unwrap()
}

fn bench_dft_3d(c: &mut Criterion) {
    let field = gaussian_field_3d(64);
    c.bench_function("dft_3d_64", |b| {
        b.iter(|| black_box(&field).dft().unwrap())
    });
}

fn bench_noise_functional(c: &mut Criterion) {
    let field = gaussian_field_3d(96);
    c.bench_function("noise_resolution_functional_3d_96", |b| {
        b.iter(|| noise_resolution_functional(black_box(&field), true).unwrap())
    });
}

fn bench_momentum_rep(c: &mut Criterion) {
    let mode = ModeSpec::epanechnikov_amplitude(3, 1.0).unwrap();
    c.bench_function("epanechnikov_momentum_3d", |b| {
        b.iter(|| black_box(&mode).momentum().unwrap())
    });
}

fn bench_simulation(c: &mut Criterion) {
    let config = ExperimentConfig {
        width: 64,
        height: 8,
        n_frames: 128,
        mean_counts: 1000.0,
        pixel_pitch: 1.0,
        seed: 17,
        sharing: None,
    };
    c.bench_function("simulate_frames_64x8x128", |b| {
        b.iter(|| simulate_frames(black_box(&config)).unwrap())
    });
}

fn bench_surface(c: &mut Criterion) {
    let config = ExperimentConfig {
        width: 64,
        height: 8,
        n_frames: 128,
        mean_counts: 1000.0,
        pixel_pitch: 1.0,
        seed: 17,
        sharing: None,
    };
    let stack = simulate_frames(&config).unwrap();
    c.bench_function("q2_surface_6_cells", |b| {
        b.iter(|| {
            analyze_stack(
                black_box(&stack),
                &[1, 2, 4],
                &[1, 2],
                ResolutionConvention::GeometricArea,
                &Psf::UniformPixel,
                false,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_dft_3d,
    bench_noise_functional,
    bench_momentum_rep,
    bench_simulation,
    bench_surface
);
criterion_main!(benches);
