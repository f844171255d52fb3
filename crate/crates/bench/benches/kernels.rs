use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use std::hint::black_box;

use reclab_core::divergences::{am_norm, fidelity, sandwiched_renyi};
use reclab_core::gamma::{build_v_eta, thm1_rhs, InstanceBundle};
use reclab_core::matcore::eig_hermitian;
use reclab_core::matcore::HermitianMatrix;
use reclab_core::quantum::{natural_cone_vector, relative_entropy, State};
use reclab_core::recovery::{averaged_recovery, rotated_petz};
use reclab_core::regularize::gaussian_regularize;
use reclab_core::sampling::{random_hermitian, random_state_density};
use reclab_core::{Prng, QuadratureSpec};

fn instance(n: usize, seed: u64) -> InstanceBundle {
    let mut rng = Prng::seed_from_u64(seed);
    InstanceBundle::random(n, n, 2, None, &mut rng).unwrap()
}

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral");
    for n in [2usize, 4, 8, 16] {
        let mut rng = Prng::seed_from_u64(n as u64);
        let h = HermitianMatrix::new(random_hermitian(n, &mut rng)).unwrap();
        g.bench_with_input(BenchmarkId::new("eig_hermitian", n), &h, |b, h| {
            b.iter(|| eig_hermitian(black_box(h)))
        });
    }
    g.finish();
}

fn divergences(c: &mut Criterion) {
    let mut g = c.benchmark_group("divergences");
    for n in [2usize, 4] {
        let mut rng = Prng::seed_from_u64(7 + n as u64);
        let rho = State::new(random_state_density(n, n, &mut rng)).unwrap();
        let sigma = State::new(random_state_density(n, n, &mut rng)).unwrap();
        let xi = natural_cone_vector(&rho);
        g.bench_function(BenchmarkId::new("relative_entropy", n), |b| {
            b.iter(|| relative_entropy(black_box(&rho), black_box(&sigma)))
        });
        g.bench_function(BenchmarkId::new("fidelity", n), |b| {
            b.iter(|| fidelity(&rho, &sigma))
        });
        g.bench_function(BenchmarkId::new("am_norm_q1.5", n), |b| {
            b.iter(|| am_norm(&xi, &sigma, 1.5).unwrap())
        });
        g.bench_function(BenchmarkId::new("sandwiched_0.75", n), |b| {
            b.iter(|| sandwiched_renyi(&rho, &sigma, 0.75).unwrap())
        });
        g.bench_function(BenchmarkId::new("gaussian_regularize_P64", n), |b| {
            b.iter(|| gaussian_regularize(&rho, &sigma, 64.0).unwrap())
        });
    }
    g.finish();
}

fn recovery(c: &mut Criterion) {
    let mut g = c.benchmark_group("recovery");
    g.sample_size(10);
    for n in [2usize, 3, 4] {
        let inst = instance(n, 11);
        let spec = inst.recovery_spec(QuadratureSpec::default()).unwrap();
        g.bench_function(BenchmarkId::new("rotated_petz", n), |b| {
            b.iter(|| rotated_petz(&spec, 0.3).unwrap())
        });
        g.bench_function(BenchmarkId::new("averaged_recovery", n), |b| {
            b.iter(|| averaged_recovery(&spec).unwrap())
        });
        let v_eta = build_v_eta(&inst).unwrap();
        g.bench_function(BenchmarkId::new("thm1_rhs_q1", n), |b| {
            b.iter(|| thm1_rhs(&inst, &v_eta, 1.0, &QuadratureSpec::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, spectral, divergences, recovery);
criterion_main!(benches);
