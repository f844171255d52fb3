//! States, the standard form of `M_n`, relative modular operators, Connes
//! cocycles and relative entropy.
//!
//! `M_n` acts on the Hilbert space of `n × n` matrices (Hilbert–Schmidt inner
//! product) by left multiplication. A vector with amplitude `X` induces the
//! functional `a ↦ Tr[X† a X]`, i.e. the density `X X†`. The natural-cone
//! representative of a density `ρ` is `ρ^{1/2}`, the modular conjugation is
//! `X ↦ X†`, and the relative modular operator of two cone vectors is
//! `Δ_{η,ψ}(X) = ρ_η X ρ_ψ^{-1}` (pseudo-inverse on the support).
//!
//! All entropies are in nats.

use crate::error::{Error, Result};
use crate::matcore::{
    c64, eig_hermitian, hs_inner, max_abs, CMatrix, HermitianMatrix, SpectralDecomposition,
    SuperOperator, C64,
};

/// Tolerance for the PSD check: `λ_min ≥ -PSD_TOL · λ_max`.
pub const PSD_TOL: f64 = 1e-11;
/// Mass of `ρ` outside `supp σ` above which relative entropy is infinite.
pub const SUPPORT_MASS_TOL: f64 = 1e-10;

/// A positive functional on `M_n`, stored as its density.
///
/// Unit trace for states; `γ_t`-type functionals may have any positive trace.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    density: CMatrix,
    spectrum: SpectralDecomposition,
    trace: f64,
}

impl State {
    /// Validates positivity (within tolerance) of a Hermitian density.
    pub fn new(density: CMatrix) -> Result<Self> {
        let h = HermitianMatrix::new(density)?;
        Self::from_hermitian(h)
    }

    /// Like [`State::new`] but takes the Hermitian part without a Hermiticity
    /// check. Used for densities produced by long numerical pipelines.
    pub fn from_hermitian_part(density: &CMatrix) -> Result<Self> {
        Self::from_hermitian(HermitianMatrix::from_hermitian_part(density)?)
    }

    fn from_hermitian(h: HermitianMatrix) -> Result<Self> {
        let spectrum = eig_hermitian(&h);
        let lmax = spectrum.max_eigenvalue().max(0.0);
        let lmin = spectrum.min_eigenvalue();
        if lmin < -PSD_TOL * lmax.max(f64::MIN_POSITIVE) && lmin < -1e-15 {
            return Err(Error::NotPositive {
                min_eigenvalue: lmin,
            });
        }
        let density = h.into_inner();
        let trace = density.trace().re;
        Ok(Self {
            density,
            spectrum,
            trace,
        })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self::new(CMatrix::identity(n, n).unscale(n as f64)).expect("identity is positive")
    }

    /// The density scaled to unit trace.
    pub fn normalized(&self) -> Result<Self> {
        if self.trace <= 0.0 {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero functional".into(),
            ));
        }
        Self::from_hermitian_part(&self.density.unscale(self.trace))
    }

    pub fn dim(&self) -> usize {
        self.density.nrows()
    }

    pub fn density(&self) -> &CMatrix {
        &self.density
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn support_rank(&self) -> usize {
        self.spectrum.support_rank
    }

    pub fn is_faithful(&self) -> bool {
        self.spectrum.is_full_rank()
    }

    pub fn support_projection(&self) -> CMatrix {
        self.spectrum.support_projection()
    }

    /// Pseudo-power `ρ^z` on the support.
    pub fn power(&self, z: C64) -> CMatrix {
        self.spectrum.power(z)
    }

    pub fn real_power(&self, p: f64) -> CMatrix {
        self.spectrum.real_power(p)
    }

    pub fn imaginary_power(&self, t: f64) -> CMatrix {
        self.spectrum.imaginary_power(t)
    }

    pub fn sqrt(&self) -> CMatrix {
        self.spectrum.real_power(0.5)
    }

    /// `Tr[ρ a]`.
    pub fn expectation(&self, a: &CMatrix) -> C64 {
        (&self.density * a).trace()
    }

    /// Mass of `self` outside the support of `other`: `Tr[ρ (1 - s(σ))]`.
    pub fn mass_outside_support_of(&self, other: &State) -> f64 {
        let p = other.support_projection();
        (self.trace - self.expectation(&p).re).max(0.0)
    }
}

/// A vector of the standard-form Hilbert space, given by its amplitude matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GnsVector {
    pub amplitude: CMatrix,
}

impl GnsVector {
    pub fn new(amplitude: CMatrix) -> Result<Self> {
        if !amplitude.is_square() {
            return Err(Error::DimensionMismatch {
                context: "GnsVector::new (square amplitude)",
                expected: amplitude.nrows(),
                got: amplitude.ncols(),
            });
        }
        Ok(Self { amplitude })
    }

    pub fn dim(&self) -> usize {
        self.amplitude.nrows()
    }

    pub fn norm(&self) -> f64 {
        self.amplitude.norm()
    }

    pub fn inner(&self, other: &GnsVector) -> C64 {
        hs_inner(&self.amplitude, &other.amplitude)
    }

    /// Density `X X†` of the induced functional on `M_n`.
    pub fn density(&self) -> CMatrix {
        &self.amplitude * self.amplitude.adjoint()
    }

    /// Density `X† X` of the induced functional on the commutant.
    pub fn commutant_density(&self) -> CMatrix {
        self.amplitude.adjoint() * &self.amplitude
    }

    pub fn functional(&self) -> Result<State> {
        State::from_hermitian_part(&self.density())
    }

    /// `a · ξ`, the left action of an algebra element.
    pub fn left_mul(&self, a: &CMatrix) -> GnsVector {
        GnsVector {
            amplitude: a * &self.amplitude,
        }
    }
}

/// Spectral data of two densities, driving `Δ^z_{η,ψ}`.
#[derive(Debug, Clone)]
pub struct ModularPair {
    pub eta: SpectralDecomposition,
    pub psi: SpectralDecomposition,
    /// `supp ρ_ψ ⊆ supp ρ_η`.
    pub compatible: bool,
}

impl ModularPair {
    pub fn new(eta: &State, psi: &State) -> Self {
        let compatible =
            psi.mass_outside_support_of(eta) <= SUPPORT_MASS_TOL * psi.trace().max(1.0);
        Self {
            eta: eta.spectrum().clone(),
            psi: psi.spectrum().clone(),
            compatible,
        }
    }

    /// `Δ^z_{η,ψ}(X) = ρ_η^z X ρ_ψ^{-z}`.
    pub fn apply(&self, z: C64, x: &GnsVector) -> GnsVector {
        GnsVector {
            amplitude: self.eta.power(z) * &x.amplitude * self.psi.power(-z),
        }
    }

    pub fn superoperator(&self, z: C64) -> SuperOperator {
        SuperOperator::sandwich(&self.eta.power(z), &self.psi.power(-z))
    }
}

/// The natural-cone representative `ρ^{1/2}`.
pub fn natural_cone_vector(rho: &State) -> GnsVector {
    GnsVector {
        amplitude: rho.sqrt(),
    }
}

pub fn rel_modular_apply(pair: &ModularPair, z: C64, x: &GnsVector) -> GnsVector {
    pair.apply(z, x)
}

/// `J X = X†`.
pub fn modular_conjugation(x: &GnsVector) -> GnsVector {
    GnsVector {
        amplitude: x.amplitude.adjoint(),
    }
}

/// Tomita operator `S_{η,ψ} = J Δ^{1/2}_{η,ψ}`.
pub fn tomita(pair: &ModularPair, x: &GnsVector) -> GnsVector {
    modular_conjugation(&pair.apply(c64(0.5, 0.0), x))
}

/// Connes cocycle `(Dψ:Dη)_t = ρ_ψ^{it} ρ_η^{-it}`.
pub fn connes_cocycle(psi: &State, eta: &State, t: f64) -> CMatrix {
    psi.imaginary_power(t) * eta.imaginary_power(-t)
}

/// `σ^{it} a σ^{-it}`.
pub fn modular_flow(sigma: &State, t: f64, a: &CMatrix) -> CMatrix {
    sigma.imaginary_power(t) * a * sigma.imaginary_power(-t)
}

fn support_violated(rho: &State, sigma: &State) -> bool {
    rho.mass_outside_support_of(sigma) > SUPPORT_MASS_TOL
}

/// `S(ρ|σ) = Tr[ρ (log ρ − log σ)]`, `+∞` when `supp ρ ⊄ supp σ`.
pub fn relative_entropy(rho: &State, sigma: &State) -> f64 {
    assert_eq!(
        rho.dim(),
        sigma.dim(),
        "relative_entropy: dimension mismatch"
    );
    if support_violated(rho, sigma) {
        return f64::INFINITY;
    }
    let rho_log_rho: f64 = rho
        .spectrum()
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|&(k, _)| rho.spectrum().in_support(k))
        .map(|(_, &x)| x * x.ln())
        .sum();
    let cross = rho.expectation(&sigma.spectrum().log()).re;
    rho_log_rho - cross
}

/// Relative entropy from the derivative of `t ↦ Tr[ρ (Dσ:Dρ)_t]` at zero,
/// by a central difference with step `h`.
///
/// `Tr[ρ σ^{it} ρ^{-it}]` has derivative `-i S(ρ|σ)` at `t = 0`.
pub fn relative_entropy_via_cocycle(rho: &State, sigma: &State, h: f64) -> Result<f64> {
    if support_violated(rho, sigma) {
        return Err(Error::SupportViolation(
            "cocycle derivative undefined: supp ρ ⊄ supp σ".into(),
        ));
    }
    if h <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {h}"
        )));
    }
    let f = |t: f64| rho.expectation(&connes_cocycle(sigma, rho, t));
    let derivative = (f(h) - f(-h)) / (2.0 * h);
    Ok((c64(0.0, 1.0) * derivative).re)
}

/// Diagnostic `(‖ξ_ρ‖² − ⟨ξ_ρ, Δ^α_{σ,ρ} ξ_ρ⟩)/α`; tends to `S(ρ|σ)` as `α → 0⁺`.
pub fn relative_entropy_alpha(rho: &State, sigma: &State, alpha: f64) -> f64 {
    let xi = natural_cone_vector(rho);
    let pair = ModularPair::new(sigma, rho);
    let moved = pair.apply(c64(alpha, 0.0), &xi);
    (rho.trace() - xi.inner(&moved).re) / alpha
}

/// Smallest `c` with `ρ ≤ c σ`: `λ_max(σ^{-1/2} ρ σ^{-1/2})`, `+∞` off support.
pub fn majorization_constant(rho: &State, sigma: &State) -> f64 {
    if support_violated(rho, sigma) {
        return f64::INFINITY;
    }
    let s = sigma.real_power(-0.5);
    let m = &s * rho.density() * &s;
    crate::matcore::eig_of(&m)
        .map(|d| d.max_eigenvalue())
        .unwrap_or(f64::INFINITY)
}

/// Largest entry-wise deviation of a density from Hermitian PSD form; used in checks.
pub fn density_scale(rho: &State) -> f64 {
    max_abs(rho.density())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{identity, max_abs_diff, CVector};
    use crate::sampling::{random_matrix, random_state_density, Prng};
    use rand::SeedableRng;

    fn diag_state(p: &[f64]) -> State {
        State::new(CMatrix::from_diagonal(&CVector::from_iterator(
            p.len(),
            p.iter().map(|&x| c64(x, 0.0)),
        )))
        .unwrap()
    }

    fn random_state(n: usize, rank: usize, rng: &mut Prng) -> State {
        State::new(random_state_density(n, rank, rng)).unwrap()
    }

    #[test]
    fn rejects_negative_density() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(1.0, 0.0), c64(-0.1, 0.0)]));
        assert!(matches!(State::new(m), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn natural_cone_examples() {
        let v = natural_cone_vector(&diag_state(&[1.0, 0.0]));
        assert!(max_abs_diff(&v.amplitude, &diag_state(&[1.0, 0.0]).density().clone()) < 1e-15);
        let v = natural_cone_vector(&State::maximally_mixed(3));
        assert!(max_abs_diff(&v.amplitude, &identity(3).unscale(3f64.sqrt())) < 1e-15);
        let mut rng = Prng::seed_from_u64(1);
        let rho = random_state(4, 4, &mut rng);
        let x = natural_cone_vector(&rho);
        assert!(max_abs_diff(&(&x.amplitude * &x.amplitude), rho.density()) < 1e-10);
        assert!((x.norm().powi(2) - x.density().trace().re).abs() < 1e-14);
    }

    #[test]
    fn modular_operator_examples() {
        let mut rng = Prng::seed_from_u64(2);
        let rho = random_state(3, 3, &mut rng);
        let pair = ModularPair::new(&rho, &rho);
        let x = GnsVector::new(random_matrix(3, 3, &mut rng)).unwrap();
        let same = pair.apply(c64(0.0, 0.0), &x);
        assert!(max_abs_diff(&same.amplitude, &x.amplitude) < 1e-13);

        // Tomita relation S(a ξ) = a† ξ.
        let xi = natural_cone_vector(&rho);
        for _ in 0..5 {
            let a = random_matrix(3, 3, &mut rng);
            let lhs = tomita(&pair, &xi.left_mul(&a));
            let rhs = xi.left_mul(&a.adjoint());
            assert!(max_abs_diff(&lhs.amplitude, &rhs.amplitude) < 1e-10);
        }

        // Imaginary powers are isometric.
        let sigma = random_state(3, 3, &mut rng);
        let pair = ModularPair::new(&sigma, &rho);
        let moved = pair.apply(c64(0.0, 1.7), &x);
        assert!((moved.norm() - x.norm()).abs() < 1e-12);
    }

    #[test]
    fn conjugation_properties() {
        let mut rng = Prng::seed_from_u64(3);
        let rho = random_state(3, 3, &mut rng);
        let xi = natural_cone_vector(&rho);
        assert!(max_abs_diff(&modular_conjugation(&xi).amplitude, &xi.amplitude) < 1e-15);
        let x = GnsVector::new(random_matrix(3, 3, &mut rng)).unwrap();
        let y = GnsVector::new(random_matrix(3, 3, &mut rng)).unwrap();
        let ix = GnsVector::new(x.amplitude.scale(1.0) * c64(0.0, 1.0)).unwrap();
        let lhs = modular_conjugation(&ix).amplitude;
        let rhs = modular_conjugation(&x).amplitude * c64(0.0, -1.0);
        assert!(max_abs_diff(&lhs, &rhs) < 1e-15);
        let a = modular_conjugation(&x).inner(&modular_conjugation(&y));
        let b = x.inner(&y).conj();
        assert!((a - b).norm() < 1e-12);
        let twice = modular_conjugation(&modular_conjugation(&x));
        assert_eq!(twice, x);
    }

    #[test]
    fn cocycle_examples() {
        let mut rng = Prng::seed_from_u64(4);
        let rho = random_state(3, 3, &mut rng);
        for t in [-1.0, 0.3, 2.0] {
            assert!(max_abs_diff(&connes_cocycle(&rho, &rho, t), &identity(3)) < 1e-12);
        }
        let singular = random_state(3, 2, &mut rng);
        let at_zero = connes_cocycle(&rho, &singular, 0.0);
        assert!(max_abs_diff(&at_zero, &singular.support_projection()) < 1e-12);

        let p = [0.2, 0.3, 0.5];
        let q = [0.6, 0.1, 0.3];
        let t = 0.8;
        let u = connes_cocycle(&diag_state(&p), &diag_state(&q), t);
        for k in 0..3 {
            let expected = (c64(0.0, t) * (p[k].ln() - q[k].ln())).exp();
            assert!((u[(k, k)] - expected).norm() < 1e-13);
        }

        // Chain identity.
        let sigma = random_state(3, 3, &mut rng);
        for t in [-0.7, 1.3] {
            let prod = connes_cocycle(&rho, &sigma, t) * connes_cocycle(&sigma, &rho, t);
            assert!(max_abs_diff(&prod, &identity(3)) < 1e-10);
        }
    }

    #[test]
    fn relative_entropy_examples() {
        let rho = diag_state(&[0.5, 0.5]);
        assert!(relative_entropy(&rho, &rho).abs() < 1e-15);
        let sigma = diag_state(&[0.25, 0.75]);
        let expected = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((relative_entropy(&rho, &sigma) - expected).abs() < 1e-14);
        assert!((expected - 0.143_841_036_225_890_2).abs() < 1e-12);
        assert!(relative_entropy(&diag_state(&[1.0, 0.0]), &diag_state(&[0.0, 1.0])).is_infinite());
    }

    #[test]
    fn cocycle_derivative_matches_closed_form() {
        let rho = diag_state(&[0.5, 0.5]);
        let sigma = diag_state(&[0.25, 0.75]);
        let est = relative_entropy_via_cocycle(&rho, &sigma, 1e-4).unwrap();
        assert!((est - 0.143_841_036_225_890_2).abs() < 1e-6);
        assert!(
            relative_entropy_via_cocycle(&rho, &rho, 1e-4)
                .unwrap()
                .abs()
                < 1e-12
        );

        let mut rng = Prng::seed_from_u64(5);
        for n in 2..=4 {
            for _ in 0..10 {
                let a = random_state(n, n, &mut rng);
                let b = random_state(n, n, &mut rng);
                let est = relative_entropy_via_cocycle(&a, &b, 1e-4).unwrap();
                assert!((est - relative_entropy(&a, &b)).abs() < 1e-5);
            }
        }
        let bad =
            relative_entropy_via_cocycle(&diag_state(&[1.0, 0.0]), &diag_state(&[0.0, 1.0]), 1e-4);
        assert!(matches!(bad, Err(Error::SupportViolation(_))));
    }

    #[test]
    fn alpha_limit_diagnostic_converges() {
        let mut rng = Prng::seed_from_u64(6);
        let a = random_state(3, 3, &mut rng);
        let b = random_state(3, 3, &mut rng);
        let s = relative_entropy(&a, &b);
        let coarse = (relative_entropy_alpha(&a, &b, 1e-2) - s).abs();
        let fine = (relative_entropy_alpha(&a, &b, 1e-4) - s).abs();
        assert!(fine < coarse && fine < 1e-3);
    }

    #[test]
    fn nonnegativity_on_random_pairs() {
        let mut rng = Prng::seed_from_u64(7);
        for k in 0..200 {
            let n = 2 + k % 3;
            let a = random_state(n, 1 + k % n, &mut rng);
            let b = random_state(n, n, &mut rng);
            assert!(relative_entropy(&a, &b) >= -1e-10);
        }
    }

    #[test]
    fn majorization_examples() {
        let mut rng = Prng::seed_from_u64(8);
        let rho = random_state(3, 3, &mut rng);
        assert!((majorization_constant(&rho, &rho) - 1.0).abs() < 1e-10);
        let c = majorization_constant(&diag_state(&[0.9, 0.1]), &diag_state(&[0.5, 0.5]));
        assert!((c - 1.8).abs() < 1e-12);
        assert!(
            majorization_constant(&diag_state(&[1.0, 0.0]), &diag_state(&[0.0, 1.0])).is_infinite()
        );
    }

    #[test]
    fn modular_flow_examples() {
        let mut rng = Prng::seed_from_u64(9);
        let sigma = random_state(3, 3, &mut rng);
        let a = random_matrix(3, 3, &mut rng);
        assert!(max_abs_diff(&modular_flow(&sigma, 0.0, &a), &a) < 1e-13);
        let commuting = sigma.real_power(2.0) + sigma.density();
        assert!(max_abs_diff(&modular_flow(&sigma, 1.9, &commuting), &commuting) < 1e-12);
        let composed = modular_flow(&sigma, 0.4, &modular_flow(&sigma, -1.1, &a));
        assert!(max_abs_diff(&composed, &modular_flow(&sigma, -0.7, &a)) < 1e-10);
    }

    #[test]
    fn delta_quadratic_form_matches_trace_formula() {
        let mut rng = Prng::seed_from_u64(10);
        for _ in 0..20 {
            let rho = random_state(3, 2, &mut rng);
            let sigma = random_state(3, 3, &mut rng);
            let a = random_matrix(3, 3, &mut rng);
            let v = natural_cone_vector(&sigma).left_mul(&a);
            let pair = ModularPair::new(&rho, &sigma);
            let quad = v.inner(&pair.apply(c64(1.0, 0.0), &v)).re;
            let direct = (rho.density() * &a * sigma.support_projection() * a.adjoint())
                .trace()
                .re;
            assert!((quad - direct).abs() < 1e-10);
        }
    }
}
