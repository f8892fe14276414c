//! Compares the data-parallel scan dispatch against the sequential path on
//! a small thermal carrier spectrum.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use sweptcav::bloch::{thermal_excitation, DriveSpec};
use sweptcav::field::{integrate_swept_field, FieldTrajectory, SweepSpec};
use sweptcav::motion::{coupling_profile, thermal_distribution, ThermalDistribution, Transition};
use sweptcav::params::{derive_cavity_figures, CavityConfig, CavityFigures};

fn figures() -> CavityFigures {
    derive_cavity_figures(&CavityConfig {
        finesse: 35_000.0,
        length: 0.021,
        waist: 54e-6,
        mirror_curvature: 0.025,
        wavelength: 729e-9,
    })
    .unwrap()
}

struct Workload {
    field: FieldTrajectory,
    dist: ThermalDistribution,
    weights: Vec<f64>,
    detunings: Vec<f64>,
}

fn workload() -> Workload {
    let figures = figures();
    let sweep = SweepSpec {
        nu_l: 0.23,
        window: 5.0,
        samples_per_tau: 20.0,
    };
    let field = integrate_swept_field(&figures, &sweep).unwrap();
    let dist = thermal_distribution(4.9, 1e-4).unwrap();
    let profile = coupling_profile(&dist, Transition::Carrier, 0.025, 0.0).unwrap();
    let detunings: Vec<f64> = (0..16)
        .map(|i| std::f64::consts::TAU * 40.0e3 * (2.0 * i as f64 / 15.0 - 1.0))
        .collect();
    Workload {
        field,
        dist,
        weights: profile.weights,
        detunings,
    }
}

fn excitation(w: &Workload, i: usize) -> f64 {
    let drive = DriveSpec {
        omega_peak: std::f64::consts::TAU * 11.0e3,
        motional_weight: 1.0,
        detuning: w.detunings[i],
        gamma_pop: std::f64::consts::TAU * 0.17,
        gamma_laser: std::f64::consts::PI * 6.0e3,
    };
    thermal_excitation(&drive, &w.field, &w.dist, &w.weights).unwrap()
}

fn bench_scan(c: &mut Criterion) {
    let w = workload();
    let n = w.detunings.len();

    let mut group = c.benchmark_group("carrier_scan_16pts");
    group.sample_size(10);

    group.bench_function("dispatch", |b| {
        b.iter(|| black_box(sweptcav::exec::map_indexed(n, |i| excitation(&w, i))))
    });

    group.bench_function("sequential", |b| {
        b.iter(|| black_box(sweptcav::exec::map_indexed_seq(n, |i| excitation(&w, i))))
    });

    #[cfg(feature = "parallel")]
    group.bench_function("one_thread_pool", |b| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        b.iter(|| pool.install(|| black_box(sweptcav::exec::map_indexed(n, |i| excitation(&w, i)))))
    });

    group.finish();
}

criterion_group!(benches, bench_scan);
criterion_main!(benches);
