use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dynpictures::chaos::{lyapunov_ensemble, LyapunovConfig};
use dynpictures::kvn::{density_of, evolve_analytic, GaussianState, GridSpec, KvnWaveFunction, Observable};
use dynpictures::numerics::Numerics;
use dynpictures::par::Execution;
use dynpictures::phase::{Model, PhasePoint};
use dynpictures::pictures::{expectation_series, PictureTag};
use num_complex::Complex64;

fn modes() -> [(&'static str, Numerics); 2] {
    [
        ("sequential", Numerics::sequential()),
        ("parallel", Numerics { exec: Execution::Parallel, ..Default::default() }),
    ]
}

fn lyapunov(c: &mut Criterion) {
    let model = Model::henon_heiles();
    let points: Vec<PhasePoint> =
        (0..32).map(|k| PhasePoint::new(vec![0.0, 0.1 + 0.002 * k as f64], vec![0.5, 0.0]).unwrap()).collect();
    let cfg = LyapunovConfig::new(50.0, 1.0);
    let mut g = c.benchmark_group("lyapunov_ensemble");
    g.sample_size(10);
    for (name, num) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| lyapunov_ensemble(&model, black_box(&points), &cfg, &num))
        });
    }
    g.finish();
}

fn transport(c: &mut Criterion) {
    let model = Model::quartic(1.0, 1.0);
    let rho = density_of(&KvnWaveFunction::Ensemble(GaussianState::one(1.0, 0.0, 0.3, 0.3).ensemble(24).unwrap()));
    let obs = [Observable::position(0), Observable::momentum(0)];
    let times: Vec<f64> = (0..=10).map(f64::from).collect();
    let mut g = c.benchmark_group("expectation_series");
    g.sample_size(10);
    for (name, num) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| expectation_series(PictureTag::Schrodinger, &obs, black_box(&rho), &model, &times, &num).unwrap())
        });
    }
    g.finish();
}

fn pullback(c: &mut Criterion) {
    let model = Model::harmonic(1.0, 1.0);
    let state = GaussianState::one(1.0, 0.0, 0.3, 0.3);
    let grid = GridSpec::plane((-3.5, 3.5), (-3.5, 3.5), 121, 121).unwrap();
    let mut g = c.benchmark_group("grid_pullback");
    g.sample_size(10);
    for (name, num) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| evolve_analytic(&grid, &model, 2.0, &num, |z| Complex64::new(state.amplitude(z), 0.0)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, lyapunov, transport, pullback);
criterion_main!(benches);
