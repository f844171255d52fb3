//! Heisenberg-picture channels `T: M_m → M_n`, positivity checks, random
//! Stinespring channels and the two worked examples (conditional expectations
//! and Davies semigroups).
//!
//! Choi convention: `C = Σ_ij T(e_ij) ⊗ e_ij` on `C^n ⊗ C^m`, so
//! `C[p·m+i, q·m+j] = T(e_ij)[p,q]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    c64, eig_hermitian, eig_of, expm, identity, kron, matrix_unit, max_abs, max_abs_diff, unvec,
    vec, CMatrix, CVector, HermitianMatrix, SuperOperator,
};
use crate::quantum::State;
use crate::sampling::{haar_isometry, random_state_density, Prng};

/// Tolerance for the Choi PSD test, relative to `λ_max`.
pub const CP_TOL: f64 = 1e-10;
pub const UNITAL_TOL: f64 = 1e-10;
/// Bohr frequencies closer than this are merged.
pub const BOHR_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelFlags {
    pub unital_checked: bool,
    pub cp_checked: bool,
    pub two_positive_checked: bool,
    /// Built by compressing to supports of singular reference states.
    pub support_reduced: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    in_dim: usize,
    out_dim: usize,
    choi: CMatrix,
    superop: SuperOperator,
    pub flags: ChannelFlags,
}

#[derive(Debug, Clone)]
pub struct CpReport {
    pub passed: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Eigenvector of the most negative Choi eigenvalue when the test fails.
    pub witness: Option<CVector>,
}

#[derive(Debug, Clone, Copy)]
pub struct TwoPositiveReport {
    pub passed: bool,
    /// Most negative eigenvalue of `(T ⊗ id_2)(P)` seen, relative to its largest.
    pub worst: f64,
}

fn choi_from_superop(s: &SuperOperator) -> CMatrix {
    let (m, n) = (s.in_dim, s.out_dim);
    let mut c = CMatrix::zeros(n * m, n * m);
    for j in 0..m {
        for i in 0..m {
            let col = s.matrix.column(i + j * m);
            for q in 0..n {
                for p in 0..n {
                    c[(p * m + i, q * m + j)] = col[p + q * n];
                }
            }
        }
    }
    c
}

fn superop_from_choi(choi: &CMatrix, m: usize, n: usize) -> SuperOperator {
    let mut s = CMatrix::zeros(n * n, m * m);
    for j in 0..m {
        for i in 0..m {
            for q in 0..n {
                for p in 0..n {
                    s[(p + q * n, i + j * m)] = choi[(p * m + i, q * m + j)];
                }
            }
        }
    }
    SuperOperator::from_matrix(m, n, s).expect("shape fixed by construction")
}

impl Channel {
    pub fn from_superoperator(superop: SuperOperator) -> Self {
        let choi = choi_from_superop(&superop);
        Self {
            in_dim: superop.in_dim,
            out_dim: superop.out_dim,
            choi,
            superop,
            flags: ChannelFlags::default(),
        }
    }

    pub fn from_choi(in_dim: usize, out_dim: usize, choi: CMatrix) -> Result<Self> {
        let d = in_dim * out_dim;
        if choi.nrows() != d || choi.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "Channel::from_choi",
                expected: d,
                got: choi.nrows().max(choi.ncols()),
            });
        }
        let superop = superop_from_choi(&choi, in_dim, out_dim);
        Ok(Self {
            in_dim,
            out_dim,
            choi,
            superop,
            flags: ChannelFlags::default(),
        })
    }

    /// Tabulates a linear map on matrix units.
    pub fn from_fn(in_dim: usize, out_dim: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        Self::from_superoperator(SuperOperator::from_fn(in_dim, out_dim, f))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_superoperator(SuperOperator::identity(n)).certified()
    }

    /// The transpose map on `M_n`: positive and unital but not 2-positive.
    pub fn transpose(n: usize) -> Self {
        Self::from_fn(n, n, |b| b.transpose())
    }

    /// `b ↦ u b u†`.
    pub fn unitary_conjugation(u: &CMatrix) -> Self {
        Self::from_superoperator(SuperOperator::sandwich(u, &u.adjoint())).certified()
    }

    /// `b ↦ W† (b ⊗ 1_d) W` for an isometry `W: C^n → C^m ⊗ C^d`.
    pub fn stinespring(w: &CMatrix, m: usize, d: usize) -> Result<Self> {
        if w.nrows() != m * d {
            return Err(Error::DimensionMismatch {
                context: "Channel::stinespring (isometry rows)",
                expected: m * d,
                got: w.nrows(),
            });
        }
        let n = w.ncols();
        let id_d = identity(d);
        let wa = w.adjoint();
        Ok(Self::from_fn(m, n, |b| &wa * kron(b, &id_d) * w))
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub fn superoperator(&self) -> &SuperOperator {
        &self.superop
    }

    pub fn apply(&self, b: &CMatrix) -> Result<CMatrix> {
        self.check_input(b)?;
        Ok(self.superop.apply(b))
    }

    /// Evaluates `T(b) = Tr_2[C (1 ⊗ bᵀ)]` from the Choi matrix alone.
    pub fn apply_via_choi(&self, b: &CMatrix) -> Result<CMatrix> {
        self.check_input(b)?;
        let (m, n) = (self.in_dim, self.out_dim);
        let mut out = CMatrix::zeros(n, n);
        for q in 0..n {
            for p in 0..n {
                let mut acc = c64(0.0, 0.0);
                for j in 0..m {
                    for i in 0..m {
                        acc += self.choi[(p * m + i, q * m + j)] * b[(i, j)];
                    }
                }
                out[(p, q)] = acc;
            }
        }
        Ok(out)
    }

    fn check_input(&self, b: &CMatrix) -> Result<()> {
        if b.nrows() != self.in_dim || b.ncols() != self.in_dim {
            return Err(Error::DimensionMismatch {
                context: "Channel::apply",
                expected: self.in_dim,
                got: b.nrows(),
            });
        }
        Ok(())
    }

    /// Hilbert–Schmidt adjoint `T*: M_n → M_m`.
    pub fn hs_adjoint(&self) -> SuperOperator {
        self.superop.hs_adjoint()
    }

    /// Density of `x ∘ T`: the matrix with `Tr[predual(x) b] = Tr[x T(b)]`.
    pub fn predual_apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.out_dim || x.ncols() != self.out_dim {
            return Err(Error::DimensionMismatch {
                context: "Channel::predual_apply",
                expected: self.out_dim,
                got: x.nrows(),
            });
        }
        let v = self.superop.matrix.adjoint() * vec(&x.adjoint());
        Ok(unvec(&v, self.in_dim, self.in_dim)?.adjoint())
    }

    pub fn predual_state(&self, rho: &State) -> Result<State> {
        State::from_hermitian_part(&self.predual_apply(rho.density())?)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Channel) -> Result<Channel> {
        let s = self.superop.compose(&inner.superop)?;
        let mut c = Channel::from_superoperator(s);
        c.flags.support_reduced = self.flags.support_reduced || inner.flags.support_reduced;
        Ok(c)
    }

    /// Largest entry-wise Choi difference.
    pub fn choi_distance(&self, other: &Channel) -> f64 {
        if self.in_dim != other.in_dim || self.out_dim != other.out_dim {
            return f64::INFINITY;
        }
        max_abs_diff(&self.choi, &other.choi)
    }

    pub fn unital_deviation(&self) -> f64 {
        max_abs_diff(
            &self.superop.apply(&identity(self.in_dim)),
            &identity(self.out_dim),
        )
    }

    pub fn check_cp(&self) -> CpReport {
        let spec = match eig_of(&self.choi) {
            Ok(s) => s,
            Err(_) => {
                return CpReport {
                    passed: false,
                    min_eigenvalue: f64::NAN,
                    max_eigenvalue: f64::NAN,
                    witness: None,
                }
            }
        };
        let lmin = spec.min_eigenvalue();
        let lmax = spec.max_eigenvalue();
        let passed = lmin >= -CP_TOL * lmax.abs().max(1.0);
        let witness = (!passed).then(|| spec.eigenvectors.column(0).into_owned());
        CpReport {
            passed,
            min_eigenvalue: lmin,
            max_eigenvalue: lmax,
            witness,
        }
    }

    /// Positivity of `T ⊗ id_2` on random PSD block matrices `[[P00, P01], [P10, P11]]`.
    pub fn check_two_positive_sampled<R: Rng + ?Sized>(
        &self,
        samples: usize,
        rng: &mut R,
    ) -> TwoPositiveReport {
        let m = self.in_dim;
        let n = self.out_dim;
        let mut worst = f64::INFINITY;
        for _ in 0..samples {
            let rank = 1 + (rng.next_u64() % (2 * m) as u64) as usize;
            let p = random_state_density(2 * m, rank, rng);
            let mut out = CMatrix::zeros(2 * n, 2 * n);
            for bi in 0..2 {
                for bj in 0..2 {
                    let block = p.view((bi * m, bj * m), (m, m)).into_owned();
                    out.view_mut((bi * n, bj * n), (n, n))
                        .copy_from(&self.superop.apply(&block));
                }
            }
            if let Ok(s) = eig_of(&out) {
                let scale = s.max_eigenvalue().abs().max(f64::MIN_POSITIVE);
                worst = worst.min(s.min_eigenvalue() / scale);
            }
        }
        TwoPositiveReport {
            passed: worst >= -CP_TOL,
            worst,
        }
    }

    /// Minimum eigenvalue of `T(a†a) − T(a)†T(a)` (Kadison–Schwarz defect).
    pub fn kadison_defect(&self, a: &CMatrix) -> Result<f64> {
        let ta = self.apply(a)?;
        let lhs = self.apply(&(a.adjoint() * a))?;
        Ok(crate::matcore::min_eigenvalue(&(lhs - ta.adjoint() * ta)))
    }

    /// Runs the unitality and CP checks and records which passed.
    pub fn certified(mut self) -> Self {
        self.flags.unital_checked = self.in_dim > 0 && self.unital_deviation() <= UNITAL_TOL;
        self.flags.cp_checked = self.check_cp().passed;
        self.flags.two_positive_checked = self.flags.cp_checked;
        self
    }

    pub fn to_json(&self) -> ChannelJson {
        let rows = |f: fn(&crate::matcore::C64) -> f64| -> Vec<Vec<f64>> {
            (0..self.choi.nrows())
                .map(|i| {
                    (0..self.choi.ncols())
                        .map(|j| f(&self.choi[(i, j)]))
                        .collect()
                })
                .collect()
        };
        ChannelJson {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            choi_re: rows(|z| z.re),
            choi_im: rows(|z| z.im),
            flags: self.flags,
        }
    }

    pub fn from_json(j: &ChannelJson) -> Result<Self> {
        let d = j.in_dim * j.out_dim;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !shape_ok(&j.choi_re) || !shape_ok(&j.choi_im) {
            return Err(Error::Config {
                field: "choi_re/choi_im".into(),
                message: format!("expected {d}×{d} arrays"),
            });
        }
        let choi = CMatrix::from_fn(d, d, |i, k| c64(j.choi_re[i][k], j.choi_im[i][k]));
        let mut c = Channel::from_choi(j.in_dim, j.out_dim, choi)?;
        c.flags = j.flags;
        Ok(c)
    }
}

/// Serialized channel.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChannelJson {
    pub in_dim: usize,
    pub out_dim: usize,
    pub choi_re: Vec<Vec<f64>>,
    pub choi_im: Vec<Vec<f64>>,
    pub flags: ChannelFlags,
}

/// `T(b) = W†(b ⊗ 1_d)W` with Haar-random `W: C^n → C^m ⊗ C^d`.
pub fn random_unital_cp_channel(n: usize, m: usize, d: usize, seed: u64) -> Result<Channel> {
    use rand::SeedableRng;
    let mut rng = Prng::seed_from_u64(seed);
    random_unital_cp_channel_with(n, m, d, &mut rng)
}

pub fn random_unital_cp_channel_with<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    d: usize,
    rng: &mut R,
) -> Result<Channel> {
    if n == 0 || m == 0 || d == 0 {
        return Err(Error::InvalidArgument(
            "channel dimensions must be positive".into(),
        ));
    }
    if m * d < n {
        return Err(Error::InvalidArgument(format!(
            "need m·d ≥ n for an isometry C^{n} → C^{m}⊗C^{d}"
        )));
    }
    let w = haar_isometry(m * d, n, rng);
    Ok(Channel::stinespring(&w, m, d)?.certified())
}

/// Inclusion `ι(b) = b ⊗ 1` and expectation `E(a) = (id ⊗ tr/n_E)(a)`.
pub fn conditional_expectation_pair(n_b: usize, n_e: usize) -> (Channel, Channel) {
    let id_e = identity(n_e);
    let iota = Channel::from_fn(n_b, n_b * n_e, |b| kron(b, &id_e)).certified();
    let e = Channel::from_fn(n_b * n_e, n_b, |a| {
        crate::matcore::partial_trace(a, (n_b, n_e), crate::matcore::Factor::Second)
            .expect("shape fixed by construction")
            .unscale(n_e as f64)
    })
    .certified();
    (iota, e)
}

/// `Θ(a) = U conj(U† a U) U†`: complex conjugation in the basis given by the columns of `U`.
pub fn theta_apply(basis: &CMatrix, a: &CMatrix) -> CMatrix {
    basis * (basis.adjoint() * a * basis).conjugate() * basis.adjoint()
}

/// Quantum Markov semigroup `T_t = exp(tL)` with detailed balance.
#[derive(Debug, Clone)]
pub struct Semigroup {
    pub dim: usize,
    pub generator: SuperOperator,
    pub sigma: State,
    pub beta: f64,
    /// Eigenbasis of the Hamiltonian (columns); fixes `Θ`.
    pub theta_basis: CMatrix,
    /// Distinct Bohr frequencies after merging.
    pub bohr_frequencies: Vec<f64>,
}

/// KMS-compatible rate: `γ(−ω) = e^{−βω} γ(ω)`.
pub fn kms_rate(beta: f64, omega: f64) -> f64 {
    2.0 / (1.0 + (-beta * omega).exp())
}

/// Davies generator for `H` at inverse temperature `β`.
///
/// Each coupling is first replaced by its real part in the eigenbasis of `H`,
/// so that the generator commutes with `Θ`.
pub fn davies_semigroup(h: &CMatrix, beta: f64, couplings: &[CMatrix]) -> Result<Semigroup> {
    let h = HermitianMatrix::new(h.clone())?;
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "β must be finite and ≥ 0, got {beta}"
        )));
    }
    let n = h.dim();
    let spec = eig_hermitian(&h);
    let u = spec.eigenvectors.clone();
    let energies = spec.eigenvalues.clone();

    // Gibbs state, shifted for stability.
    let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let diag = CMatrix::from_diagonal(&CVector::from_iterator(
        n,
        weights.iter().map(|&w| c64(w / z, 0.0)),
    ));
    let sigma = State::from_hermitian_part(&(&u * diag * u.adjoint()))?;

    // Bohr frequencies E_j − E_i, merged within tolerance.
    let mut diffs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            diffs.push((energies[j] - energies[i], i, j));
        }
    }
    diffs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut freqs: Vec<f64> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &(w, i, j) in &diffs {
        if groups.is_empty() || w - last > BOHR_MERGE_TOL {
            groups.push(Vec::new());
            freqs.push(w);
        }
        groups.last_mut().unwrap().push((i, j));
        last = w;
    }
    // Representative frequency: mean of the cluster.
    for (k, g) in groups.iter().enumerate() {
        freqs[k] = g
            .iter()
            .map(|&(i, j)| energies[j] - energies[i])
            .sum::<f64>()
            / g.len() as f64;
    }

    let id = identity(n);
    let mut gen = CMatrix::zeros(n * n, n * n);
    for a in couplings {
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "davies_semigroup (coupling)",
                expected: n,
                got: a.nrows(),
            });
        }
        let a_h = (u.adjoint() * a * &u).map(|z| c64(z.re, 0.0));
        for (g, &w) in groups.iter().zip(&freqs) {
            let mut a_w = CMatrix::zeros(n, n);
            for &(i, j) in g {
                a_w[(i, j)] = a_h[(i, j)];
            }
            if max_abs(&a_w) == 0.0 {
                continue;
            }
            let a_w = &u * a_w * u.adjoint();
            let rate = kms_rate(beta, w);
            let a_wd = a_w.adjoint();
            let m = &a_wd * &a_w;
            let term = SuperOperator::sandwich(&a_wd, &a_w).matrix
                - SuperOperator::sandwich(&m, &id).matrix.scale(0.5)
                - SuperOperator::sandwich(&id, &m).matrix.scale(0.5);
            gen += term.scale(rate);
        }
    }
    Ok(Semigroup {
        dim: n,
        generator: SuperOperator::from_matrix(n, n, gen)?,
        sigma,
        beta,
        theta_basis: u,
        bohr_frequencies: freqs,
    })
}

/// `T_t = exp(tL)` as a channel.
pub fn semigroup_step(s: &Semigroup, t: f64) -> Result<Channel> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "semigroup time must be finite and ≥ 0, got {t}"
        )));
    }
    let m = expm(&s.generator.matrix.scale(t));
    Ok(Channel::from_superoperator(SuperOperator::from_matrix(s.dim, s.dim, m)?).certified())
}

/// A Davies semigroup with random `H` and couplings, used by fixtures and checks.
pub fn random_davies<R: Rng + ?Sized>(
    n: usize,
    beta: f64,
    couplings: usize,
    rng: &mut R,
) -> Result<Semigroup> {
    let h = crate::sampling::random_hermitian(n, rng);
    let cs: Vec<CMatrix> = (0..couplings)
        .map(|_| crate::sampling::random_hermitian(n, rng))
        .collect();
    davies_semigroup(&h, beta, &cs)
}

/// Matrix units of `M_n`, row-major.
pub fn matrix_units(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(matrix_unit(i, j, n, n));
        }
    }
    out
}
