//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the spectral helpers of the crate; matrix functions go
//! through nalgebra's `SymmetricEigen` directly or through 2×2 closed forms.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use reclab_core::Channel;

pub type M = DMatrix<Complex<f64>>;

pub fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

pub fn eig(m: &M) -> (Vec<f64>, M) {
    let h = (m + m.adjoint()).scale(0.5);
    let e = SymmetricEigen::new(h);
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

/// `f` applied to the eigenvalues above `cut`; zero on the rest.
pub fn func(m: &M, cut: f64, f: impl Fn(f64) -> f64) -> M {
    let (w, u) = eig(m);
    let n = w.len();
    let mut d = M::zeros(n, n);
    for k in 0..n {
        if w[k] > cut {
            d[(k, k)] = c(f(w[k]), 0.0);
        }
    }
    &u * d * u.adjoint()
}

/// `Σ_ij |⟨u_i|v_j⟩|² r_i (log r_i − log s_j)`, `+∞` on support violation.
pub fn relative_entropy(rho: &M, sigma: &M) -> f64 {
    let (r, u) = eig(rho);
    let (s, v) = eig(sigma);
    let mut total = 0.0;
    for (i, &ri) in r.iter().enumerate() {
        if ri <= 1e-14 {
            continue;
        }
        for (j, &sj) in s.iter().enumerate() {
            let ov = (u.column(i).adjoint() * v.column(j))[(0, 0)].norm_sqr();
            if ov * ri <= 1e-14 {
                continue;
            }
            if sj <= 1e-14 {
                return f64::INFINITY;
            }
            total += ov * ri * (ri.ln() - sj.ln());
        }
    }
    total
}

pub fn von_neumann(rho: &M) -> f64 {
    eig(rho)
        .0
        .iter()
        .filter(|&&x| x > 1e-15)
        .map(|&x| -x * x.ln())
        .sum()
}

/// `Tr √(√σ ρ √σ)`.
pub fn fidelity(rho: &M, sigma: &M) -> f64 {
    let s = func(sigma, 1e-15, f64::sqrt);
    eig(&(&s * rho * &s))
        .0
        .iter()
        .map(|&x| x.max(0.0).sqrt())
        .sum()
}

pub fn trace_norm_hermitian(m: &M) -> f64 {
    eig(m).0.iter().map(|x| x.abs()).sum()
}

/// `(s−1)^{-1} log Tr (σ^γ ρ σ^γ)^s`, `γ = (1−s)/2s`.
pub fn sandwiched(rho: &M, sigma: &M, s: f64) -> f64 {
    let g = (1.0 - s) / (2.0 * s);
    let sg = func(sigma, 1e-15, |x| x.powf(g));
    let tr: f64 = eig(&(&sg * rho * &sg))
        .0
        .iter()
        .map(|&x| x.max(0.0).powf(s))
        .sum();
    tr.ln() / (s - 1.0)
}

/// `ρ_B[j, i] = Tr[ρ T(e_ij)]`, computed from the Heisenberg map only.
pub fn restrict(channel: &Channel, rho: &M) -> M {
    let m = channel.in_dim();
    let mut out = M::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut e = M::zeros(m, m);
            e[(i, j)] = c(1.0, 0.0);
            out[(j, i)] = (rho * channel.apply(&e).unwrap()).trace();
        }
    }
    out
}

pub fn kron(a: &M, b: &M) -> M {
    a.kronecker(b)
}

pub fn max_abs_diff(a: &M, b: &M) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Powers of a faithful qubit density `(1 + x·σ)/2` in closed form.
fn qubit_power(x: [f64; 3], p: f64) -> M {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let (lp, lm) = ((1.0 + r) / 2.0, (1.0 - r) / 2.0);
    let (a, b) = (
        0.5 * (lp.powf(p) + lm.powf(p)),
        0.5 * (lp.powf(p) - lm.powf(p)),
    );
    let n = if r > 0.0 {
        [x[0] / r, x[1] / r, x[2] / r]
    } else {
        [0.0; 3]
    };
    M::from_row_slice(
        2,
        2,
        &[
            c(a + b * n[2], 0.0),
            c(b * n[0], -b * n[1]),
            c(b * n[0], b * n[1]),
            c(a - b * n[2], 0.0),
        ],
    )
}

fn bloch(u: [f64; 3]) -> [f64; 3] {
    let r = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if r == 0.0 {
        return [0.0; 3];
    }
    let k = r.tanh() / r;
    [u[0] * k, u[1] * k, u[2] * k]
}

fn bloch_of(rho: &M) -> [f64; 3] {
    [
        2.0 * rho[(1, 0)].re,
        2.0 * rho[(1, 0)].im,
        (rho[(0, 0)] - rho[(1, 1)]).re,
    ]
}

/// `inf_ω ‖ψ^r Z ω^{−r}‖₂` over faithful qubit states `ω`, `r = (2−q)/2q`,
/// by a coarse grid followed by compass search.
pub fn am_norm_variational(z: &M, psi: &M, q: f64) -> f64 {
    let r = (2.0 - q) / (2.0 * q);
    let left = qubit_power(bloch_of(psi), r) * z;
    let obj = |u: [f64; 3]| (&left * qubit_power(bloch(u), -r)).norm();
    let mut best = ([0.0; 3], obj([0.0; 3]));
    let grid = [-2.5, -1.2, -0.5, 0.0, 0.5, 1.2, 2.5];
    for &a in &grid {
        for &b in &grid {
            for &d in &grid {
                let v = obj([a, b, d]);
                if v < best.1 {
                    best = ([a, b, d], v);
                }
            }
        }
    }
    let mut step = 0.5;
    while step > 1e-9 {
        let mut moved = false;
        for k in 0..3 {
            for sgn in [-1.0, 1.0] {
                let mut u = best.0;
                u[k] += sgn * step;
                let v = obj(u);
                if v < best.1 {
                    best = (u, v);
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    best.1
}
