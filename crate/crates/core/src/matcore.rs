//! Dense Hermitian spectral calculus and the vectorization toolkit.
//!
//! Conventions used throughout the crate:
//!
//! * `vec` stacks columns, so `vec(x)[i + j * rows] = x[(i, j)]`. With this
//!   ordering `vec(a x b) = (bᵀ ⊗ a) vec(x)`.
//! * Functions of singular positive matrices follow the Moore–Penrose
//!   convention: eigenvalues at or below the support cutoff
//!   `1e-12 · λ_max` are mapped to zero.
//! * Eigenvalues are sorted ascending and every eigenvector is rotated so its
//!   first non-negligible component is real and positive, which makes the
//!   decomposition reproducible bit-for-bit.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative Hermiticity tolerance accepted by [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative support cutoff: eigenvalues `<= SUPPORT_EPS * λ_max` are treated as zero.
pub const SUPPORT_EPS: f64 = 1e-12;

const PHASE_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// The matrix unit `e_ij` of shape `rows × cols`.
pub fn matrix_unit(i: usize, j: usize, rows: usize, cols: usize) -> CMatrix {
    let mut e = CMatrix::zeros(rows, cols);
    e[(i, j)] = C64::new(1.0, 0.0);
    e
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff: shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// `(m + m†) / 2`.
pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// A square complex matrix that is Hermitian up to round-off.
///
/// The stored entries are exactly Hermitian: construction symmetrizes.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates Hermiticity at `1e-12 · (1 + max|entry|)` and symmetrizes.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                context: "HermitianMatrix::new (square)",
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if !is_finite(&m) {
            return Err(Error::NonFinite);
        }
        let deviation = hermitian_deviation(&m);
        if deviation > HERMITIAN_TOL * (1.0 + max_abs(&m)) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self(symmetrize(&m)))
    }

    /// Replaces `m` by its Hermitian part without checking the deviation.
    pub fn from_hermitian_part(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                context: "HermitianMatrix::from_hermitian_part (square)",
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if !is_finite(m) {
            return Err(Error::NonFinite);
        }
        Ok(Self(symmetrize(m)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

/// Ascending eigen-decomposition `M = U diag(λ) U†` of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
    pub support_rank: usize,
    pub cutoff: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Whether eigenvalue `k` lies in the support.
    #[inline]
    pub fn in_support(&self, k: usize) -> bool {
        self.eigenvalues[k] > self.cutoff
    }

    pub fn is_full_rank(&self) -> bool {
        self.support_rank == self.dim()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_complex(|x| C64::new(x, 0.0), false)
    }

    /// `U f(Λ) U†`; with `support_only`, eigenvalues off the support map to 0.
    pub fn apply_complex(&self, f: impl Fn(f64) -> C64, support_only: bool) -> CMatrix {
        let n = self.dim();
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for k in 0..n {
            let w = if support_only && !self.in_support(k) {
                C64::new(0.0, 0.0)
            } else {
                f(self.eigenvalues[k])
            };
            for i in 0..n {
                scaled[(i, k)] *= w;
            }
        }
        scaled * u.adjoint()
    }

    /// Pseudo-power `M^z` restricted to the support (`z = 0` gives the support projection).
    pub fn power(&self, z: C64) -> CMatrix {
        self.apply_complex(|x| (z * x.ln()).exp(), true)
    }

    pub fn real_power(&self, p: f64) -> CMatrix {
        self.apply_complex(|x| C64::new(x.powf(p), 0.0), true)
    }

    /// `M^{it}` on the support; unitary there.
    pub fn imaginary_power(&self, t: f64) -> CMatrix {
        self.power(C64::new(0.0, t))
    }

    /// `log M` on the support (zero elsewhere).
    pub fn log(&self) -> CMatrix {
        self.apply_complex(|x| C64::new(x.ln(), 0.0), true)
    }

    pub fn support_projection(&self) -> CMatrix {
        self.apply_complex(|_| C64::new(1.0, 0.0), true)
    }

    /// Natural logarithms of the support eigenvalues, `None` off the support.
    pub fn log_eigenvalues(&self) -> Vec<Option<f64>> {
        (0..self.dim())
            .map(|k| self.in_support(k).then(|| self.eigenvalues[k].ln()))
            .collect()
    }
}

/// Hermitian eigen-decomposition with ascending eigenvalues and fixed phases.
pub fn eig_hermitian(m: &HermitianMatrix) -> SpectralDecomposition {
    let n = m.dim();
    let eig = SymmetricEigen::new(m.as_matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        let phase = col
            .iter()
            .find(|z| z.norm() > PHASE_TOL)
            .map(|z| z.conj() / z.norm())
            .unwrap_or(C64::new(1.0, 0.0));
        for i in 0..n {
            eigenvectors[(i, dst)] = col[i] * phase;
        }
    }
    let lambda_max = eigenvalues.last().copied().unwrap_or(0.0);
    let cutoff = if lambda_max > 0.0 {
        SUPPORT_EPS * lambda_max
    } else {
        f64::INFINITY
    };
    let support_rank = eigenvalues.iter().filter(|&&x| x > cutoff).count();
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        support_rank,
        cutoff,
    }
}

/// Convenience: symmetrize an arbitrary square matrix and decompose it.
pub fn eig_of(m: &CMatrix) -> Result<SpectralDecomposition> {
    Ok(eig_hermitian(&HermitianMatrix::from_hermitian_part(m)?))
}

/// Applies a real scalar function spectrally.
///
/// With `support_only` the function is evaluated only on eigenvalues above the
/// support cutoff (Moore–Penrose convention); otherwise on every eigenvalue.
/// A non-finite value of `f` on an evaluated eigenvalue is rejected.
pub fn mat_func(
    m: &HermitianMatrix,
    f: impl Fn(f64) -> f64,
    support_only: bool,
) -> Result<HermitianMatrix> {
    let spec = eig_hermitian(m);
    for k in 0..spec.dim() {
        if support_only && !spec.in_support(k) {
            continue;
        }
        let v = f(spec.eigenvalues[k]);
        if !v.is_finite() {
            return Err(Error::SingularFunction {
                eigenvalue: spec.eigenvalues[k],
            });
        }
    }
    let out = spec.apply_complex(|x| C64::new(f(x), 0.0), support_only);
    HermitianMatrix::from_hermitian_part(&out)
}

/// `M^z` for positive semidefinite `M` and complex `z`, on the support of `M`.
/// The result is a general complex matrix.
pub fn complex_power(m: &HermitianMatrix, z: C64) -> CMatrix {
    eig_hermitian(m).power(z)
}

/// Column-stacking vectorization.
pub fn vec(x: &CMatrix) -> CVector {
    CVector::from_column_slice(x.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &CVector, rows: usize, cols: usize) -> Result<CMatrix> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            context: "unvec",
            expected: rows * cols,
            got: v.len(),
        });
    }
    Ok(CMatrix::from_column_slice(rows, cols, v.as_slice()))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Which tensor factor a partial trace removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

/// Partial trace of an operator on `C^{d1} ⊗ C^{d2}`, tracing out `traced`.
pub fn partial_trace(x: &CMatrix, dims: (usize, usize), traced: Factor) -> Result<CMatrix> {
    let (d1, d2) = dims;
    if x.nrows() != d1 * d2 || x.ncols() != d1 * d2 {
        return Err(Error::DimensionMismatch {
            context: "partial_trace",
            expected: d1 * d2,
            got: x.nrows().max(x.ncols()),
        });
    }
    Ok(match traced {
        Factor::Second => CMatrix::from_fn(d1, d1, |i, j| {
            (0..d2).map(|k| x[(i * d2 + k, j * d2 + k)]).sum()
        }),
        Factor::First => CMatrix::from_fn(d2, d2, |i, j| {
            (0..d1).map(|k| x[(k * d2 + i, k * d2 + j)]).sum()
        }),
    })
}

pub fn singular_values(x: &CMatrix) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    SVD::new(x.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

/// Sum of singular values.
pub fn trace_norm(x: &CMatrix) -> f64 {
    singular_values(x).iter().sum()
}

/// Largest singular value.
pub fn operator_norm(x: &CMatrix) -> f64 {
    singular_values(x).into_iter().fold(0.0, f64::max)
}

/// `Tr(x† y)`.
pub fn hs_inner(x: &CMatrix, y: &CMatrix) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Moore–Penrose pseudo-inverse with relative singular-value cutoff `rcond`.
pub fn pseudo_inverse(m: &CMatrix, rcond: f64) -> CMatrix {
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut out = CMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > rcond * smax && s > 0.0 {
            let vk = v_t.row(k).adjoint();
            let uk = u.column(k).adjoint();
            out += (vk * uk).scale(1.0 / s);
        }
    }
    out
}

pub fn expm(m: &CMatrix) -> CMatrix {
    m.exp()
}

/// Minimum eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = symmetrize(m);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// A linear map `M_m → M_n` stored as its `n² × m²` matrix on vectorized inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    pub in_dim: usize,
    pub out_dim: usize,
    pub matrix: CMatrix,
}

impl SuperOperator {
    pub fn from_matrix(in_dim: usize, out_dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (out_dim * out_dim, in_dim * in_dim) {
            return Err(Error::DimensionMismatch {
                context: "SuperOperator::from_matrix",
                expected: out_dim * out_dim * in_dim * in_dim,
                got: matrix.nrows() * matrix.ncols(),
            });
        }
        Ok(Self {
            in_dim,
            out_dim,
            matrix,
        })
    }

    /// Tabulates a linear map on the matrix-unit basis of `M_{in_dim}`.
    pub fn from_fn(in_dim: usize, out_dim: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let mut matrix = CMatrix::zeros(out_dim * out_dim, in_dim * in_dim);
        for j in 0..in_dim {
            for i in 0..in_dim {
                let image = f(&matrix_unit(i, j, in_dim, in_dim));
                debug_assert_eq!(image.shape(), (out_dim, out_dim));
                matrix
                    .column_mut(i + j * in_dim)
                    .copy_from_slice(image.as_slice());
            }
        }
        Self {
            in_dim,
            out_dim,
            matrix,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            in_dim: n,
            out_dim: n,
            matrix: identity(n * n),
        }
    }

    /// The map `x ↦ left · x · right`.
    pub fn sandwich(left: &CMatrix, right: &CMatrix) -> Self {
        Self {
            in_dim: left.ncols(),
            out_dim: left.nrows(),
            matrix: kron(&right.transpose(), left),
        }
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        assert_eq!(
            x.shape(),
            (self.in_dim, self.in_dim),
            "SuperOperator::apply: input shape"
        );
        let v = &self.matrix * vec(x);
        CMatrix::from_column_slice(self.out_dim, self.out_dim, v.as_slice())
    }

    pub fn apply_vec(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SuperOperator) -> Result<SuperOperator> {
        if inner.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch {
                context: "SuperOperator::compose",
                expected: self.in_dim,
                got: inner.out_dim,
            });
        }
        Ok(SuperOperator {
            in_dim: inner.in_dim,
            out_dim: self.out_dim,
            matrix: &self.matrix * &inner.matrix,
        })
    }

    /// Adjoint with respect to the Hilbert–Schmidt inner products.
    pub fn hs_adjoint(&self) -> SuperOperator {
        SuperOperator {
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn operator_norm(&self) -> f64 {
        operator_norm(&self.matrix)
    }
}
