//! Seeded random instances.
//!
//! The generator is SplitMix64: a counter-based stream whose state advances by
//! the golden-ratio increment `0x9e3779b97f4a7c15` and whose output is the
//! `mix64` finalizer below. Per-trial seeds are derived with
//! `trial_seed = mix64(seed ^ mix64(trial_index + 1))`, so trials are
//! independent of execution order.

use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

use crate::matcore::{c64, CMatrix, C64};

pub use rand_xoshiro::SplitMix64 as Prng;

/// The SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(seed: u64, trial_index: u64) -> u64 {
    mix64(seed ^ mix64(trial_index.wrapping_add(1)))
}

/// Standard complex Gaussian: real and imaginary parts `N(0, 1/2)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // Fill row by row so the stream order does not depend on storage layout.
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_normal(rng);
        }
    }
    m
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = random_matrix(n, n, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Random density matrix of the given rank (induced measure `G G† / Tr`).
pub fn random_state_density<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> CMatrix {
    assert!(rank >= 1 && rank <= n, "rank must lie in 1..=n");
    let g = random_matrix(n, rank, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    let rho = rho.unscale(tr);
    (&rho + rho.adjoint()).scale(0.5)
}

/// Haar-random isometry `C^cols → C^rows` (`rows ≥ cols`), via phase-fixed QR.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = random_matrix(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c64(1.0, 0.0)
        };
        for i in 0..rows {
            q[(i, k)] *= phase;
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    haar_isometry(n, n, rng)
}
