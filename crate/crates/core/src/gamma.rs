//! Intertwiners `V_ψ`, `V_η`, the interpolating vector `Γ(z)` and the
//! inequality checks built on them.
//!
//! Notation: `T: B = M_m → A = M_n`, states `ρ_A` (ψ) and `σ_A` (η) on `A`,
//! `ρ_B = ρ_A ∘ T`, `σ_B = σ_A ∘ T`. On the strip `0 ≤ Re z ≤ 1/2`
//!
//! ```text
//! Γ(z) = Δ^z_{σ_A,ρ_A} V_ψ Δ^{-z}_{σ_B,ρ_B} ξ^B_ψ
//! ```
//!
//! and on the upper edge `Γ(1/2+it) = Δ^{it}_A J_A V_η J_B Δ^{-it}_B ξ^B_ψ`.

use serde::{Deserialize, Serialize};

use crate::channels::{random_unital_cp_channel_with, Channel};
use crate::divergences::{am_norm, fidelity, functional_norm_distance, sandwiched_renyi};
use crate::error::{Error, Result};
use crate::matcore::{c64, matrix_unit, pseudo_inverse, unvec, vec, CMatrix, SuperOperator, C64};
use crate::quadrature::{
    averaging_density, integrate_scalar_certified, Certificate, QuadratureSpec,
};
use crate::quantum::{natural_cone_vector, relative_entropy, GnsVector, State};
use crate::recovery::{rotated_petz, RecoverySpec};
use crate::sampling::random_state_density;

/// Max consistency residual accepted when building an intertwiner.
pub const INTERTWINER_TOL: f64 = 1e-9;
/// Relative cutoff for the least-squares pseudo-inverse.
pub const INTERTWINER_RCOND: f64 = 1e-12;
/// Certificate tolerance for the `t`-integrals.
pub const INTEGRAL_CERT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct InstanceBundle {
    pub channel: Channel,
    pub rho_a: State,
    pub sigma_a: State,
    pub rho_b: State,
    pub sigma_b: State,
}

impl InstanceBundle {
    pub fn new(channel: Channel, rho_a: State, sigma_a: State) -> Result<Self> {
        for (s, name) in [
            (&rho_a, "InstanceBundle::new (ρ_A)"),
            (&sigma_a, "InstanceBundle::new (σ_A)"),
        ] {
            if s.dim() != channel.out_dim() {
                return Err(Error::DimensionMismatch {
                    context: name,
                    expected: channel.out_dim(),
                    got: s.dim(),
                });
            }
        }
        let rho_b = channel.predual_state(&rho_a)?;
        let sigma_b = channel.predual_state(&sigma_a)?;
        Ok(Self {
            channel,
            rho_a,
            sigma_a,
            rho_b,
            sigma_b,
        })
    }

    /// Random unital CP channel `M_m → M_n` with dilation `d`, and random states.
    /// `rank_a = None` gives a faithful `ρ_A`; `σ_A` is always faithful.
    pub fn random<R: rand::Rng + ?Sized>(
        n: usize,
        m: usize,
        d: usize,
        rank_a: Option<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        let channel = random_unital_cp_channel_with(n, m, d, rng)?;
        let rho = State::new(random_state_density(n, rank_a.unwrap_or(n), rng))?;
        let sigma = State::new(random_state_density(n, n, rng))?;
        Self::new(channel, rho, sigma)
    }

    pub fn n(&self) -> usize {
        self.channel.out_dim()
    }

    pub fn m(&self) -> usize {
        self.channel.in_dim()
    }

    pub fn entropy_a(&self) -> f64 {
        relative_entropy(&self.rho_a, &self.sigma_a)
    }

    pub fn entropy_b(&self) -> f64 {
        relative_entropy(&self.rho_b, &self.sigma_b)
    }

    /// `ΔS = S(ρ_A|σ_A) − S(ρ_B|σ_B)`; `+∞` when the first term is infinite.
    pub fn delta_s(&self) -> f64 {
        let a = self.entropy_a();
        if a.is_infinite() {
            return f64::INFINITY;
        }
        a - self.entropy_b()
    }

    pub fn finite_entropy(&self) -> bool {
        self.entropy_a().is_finite()
    }

    pub fn faithful(&self) -> bool {
        self.rho_a.is_faithful() && self.sigma_a.is_faithful() && self.sigma_b.is_faithful()
    }

    pub fn recovery_spec(&self, quadrature: QuadratureSpec) -> Result<RecoverySpec> {
        RecoverySpec::new(self.channel.clone(), self.sigma_a.clone(), quadrature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntertwinerKind {
    Psi,
    Eta,
}

/// Linear map from the `B`-GNS space (`m²`) to the `A`-GNS space (`n²`).
#[derive(Debug, Clone)]
pub struct Intertwiner {
    pub kind: IntertwinerKind,
    pub matrix: CMatrix,
    pub norm: f64,
    pub residual: f64,
    m: usize,
    n: usize,
}

impl Intertwiner {
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        unvec(&(&self.matrix * vec(x)), self.n, self.n).expect("shape fixed by construction")
    }

    pub fn as_superoperator(&self) -> SuperOperator {
        SuperOperator::from_matrix(self.m, self.n, self.matrix.clone()).expect("shape fixed")
    }
}

fn least_squares(
    kind: IntertwinerKind,
    m: usize,
    n: usize,
    pairs: impl Iterator<Item = (CMatrix, CMatrix)>,
) -> Result<Intertwiner> {
    let pairs: Vec<(CMatrix, CMatrix)> = pairs.collect();
    let k = pairs.len();
    let mut src = CMatrix::zeros(m * m, k);
    let mut tgt = CMatrix::zeros(n * n, k);
    for (c, (s, t)) in pairs.iter().enumerate() {
        src.set_column(c, &vec(s));
        tgt.set_column(c, &vec(t));
    }
    let v = &tgt * pseudo_inverse(&src, INTERTWINER_RCOND);
    let residual = (&v * &src - &tgt)
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if residual > INTERTWINER_TOL {
        return Err(Error::Inconsistent {
            residual,
            tolerance: INTERTWINER_TOL,
        });
    }
    let norm = crate::matcore::singular_values(&v)
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Intertwiner {
        kind,
        matrix: v,
        norm,
        residual,
        m,
        n,
    })
}

fn basis(m: usize) -> impl Iterator<Item = CMatrix> {
    (0..m * m).map(move |k| matrix_unit(k % m, k / m, m, m))
}

/// `V_ψ: b ξ^B_ψ ↦ T(b) ξ^A_ψ`, zero on the orthogonal complement.
pub fn build_v_psi(inst: &InstanceBundle) -> Result<Intertwiner> {
    let (m, n) = (inst.m(), inst.n());
    let rb = inst.rho_b.sqrt();
    let ra = inst.rho_a.sqrt();
    let pairs = basis(m).map(|e| {
        let t = inst.channel.apply(&e).expect("dimension fixed");
        (&e * &rb, t * &ra)
    });
    least_squares(IntertwinerKind::Psi, m, n, pairs)
}

/// `V_η: s(ρ_B) b ξ^B_η ↦ s(ρ_A) T(b) ξ^A_η`.
pub fn build_v_eta(inst: &InstanceBundle) -> Result<Intertwiner> {
    let (m, n) = (inst.m(), inst.n());
    let sb = inst.sigma_b.sqrt();
    let sa = inst.sigma_a.sqrt();
    let pb = inst.rho_b.support_projection();
    let pa = inst.rho_a.support_projection();
    let pairs = basis(m).map(|e| {
        let t = inst.channel.apply(&e).expect("dimension fixed");
        (&pb * &e * &sb, &pa * t * &sa)
    });
    least_squares(IntertwinerKind::Eta, m, n, pairs)
}

/// Max over matrix units `b` of `‖V_η J_B Δ_B^{1/2} b ξ^B_ψ − J_A Δ_A^{1/2} V_ψ b ξ^B_ψ‖`.
pub fn intertwining_residual(
    inst: &InstanceBundle,
    v_psi: &Intertwiner,
    v_eta: &Intertwiner,
) -> f64 {
    let half = c64(0.5, 0.0);
    let tomita = |sigma: &State, rho: &State, x: &CMatrix| {
        (sigma.power(half) * x * rho.power(-half)).adjoint()
    };
    let rb = inst.rho_b.sqrt();
    basis(inst.m())
        .map(|e| {
            let x = &e * &rb;
            let lhs = v_eta.apply(&tomita(&inst.sigma_b, &inst.rho_b, &x));
            let rhs = tomita(&inst.sigma_a, &inst.rho_a, &v_psi.apply(&x));
            (lhs - rhs).norm()
        })
        .fold(0.0, f64::max)
}

/// `Γ(1/2 + it)` via the boundary chain.
pub fn gamma_boundary(inst: &InstanceBundle, v_eta: &Intertwiner, t: f64) -> GnsVector {
    let x0 = inst.rho_b.sqrt();
    let x1 = inst.sigma_b.imaginary_power(-t) * x0 * inst.rho_b.imaginary_power(t);
    let x2 = x1.adjoint();
    let x3 = v_eta.apply(&x2);
    let x4 = x3.adjoint();
    let x5 = inst.sigma_a.imaginary_power(t) * x4 * inst.rho_a.imaginary_power(-t);
    GnsVector { amplitude: x5 }
}

/// `Γ(z) = σ_A^z · V_ψ(σ_B^{-z} ρ_B^{1/2+z}) · ρ_A^{-z}` for `0 ≤ Re z ≤ 1/2`.
pub fn gamma_interior(inst: &InstanceBundle, v_psi: &Intertwiner, z: C64) -> Result<GnsVector> {
    if !(z.re >= -1e-15 && z.re <= 0.5 + 1e-15) {
        return Err(Error::InvalidArgument(format!(
            "Re z = {} outside [0, 1/2]",
            z.re
        )));
    }
    if z.re > 0.0 && inst.rho_b.mass_outside_support_of(&inst.sigma_b) > 1e-10 {
        return Err(Error::SupportViolation(
            "σ_B^{-z} with Re z > 0 needs supp ρ_B ⊆ supp σ_B".into(),
        ));
    }
    let inner = inst.sigma_b.power(-z) * inst.rho_b.power(c64(0.5, 0.0) + z);
    let mid = v_psi.apply(&inner);
    Ok(GnsVector {
        amplitude: inst.sigma_a.power(z) * mid * inst.rho_a.power(-z),
    })
}

/// Non-normalized functional `γ_t` with density `X X†`.
pub fn gamma_t_functional(g: &GnsVector) -> Result<State> {
    g.functional()
}

/// Density of `ω_ψ ∘ T ∘ α^t`: the predual of `α^t` applied to `ρ_B`.
pub fn rotated_recovered_density(
    inst: &InstanceBundle,
    spec: &RecoverySpec,
    t: f64,
) -> Result<CMatrix> {
    rotated_petz(spec, t)?.predual_apply(inst.rho_b.density())
}

/// `λ_min(density(ρ∘T∘α^t) − density(γ_t))`.
pub fn lemma_mon_check(inst: &InstanceBundle, v_eta: &Intertwiner, t: f64) -> Result<f64> {
    let spec = inst.recovery_spec(QuadratureSpec::default())?;
    let upper = rotated_recovered_density(inst, &spec, t)?;
    let g = gamma_boundary(inst, v_eta, t);
    Ok(crate::matcore::min_eigenvalue(&(upper - g.density())))
}

/// `−∫ p(t) log ‖Γ(1/2+it)‖²_{q,ψ} dt`.
pub fn thm1_rhs(
    inst: &InstanceBundle,
    v_eta: &Intertwiner,
    q: f64,
    quad: &QuadratureSpec,
) -> Result<(f64, Certificate)> {
    let f = |t: f64| -> Result<f64> {
        let g = gamma_boundary(inst, v_eta, t);
        Ok(-2.0 * am_norm(&g, &inst.rho_a, q)?.ln())
    };
    integrate_scalar_certified(quad, INTEGRAL_CERT_TOL, averaging_density, &f)
}

/// `−2 ∫ p(t) log F(ρ∘T∘α^t, ρ_A) dt`.
pub fn main1_rhs(inst: &InstanceBundle, quad: &QuadratureSpec) -> Result<(f64, Certificate)> {
    let spec = inst.recovery_spec(*quad)?;
    let f = |t: f64| -> Result<f64> {
        let rec = State::from_hermitian_part(&rotated_recovered_density(inst, &spec, t)?)?;
        Ok(-2.0 * fidelity(&rec, &inst.rho_a).ln())
    };
    integrate_scalar_certified(quad, INTEGRAL_CERT_TOL, averaging_density, &f)
}

/// `lhs ≥ rhs` with `slack = lhs − rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl InequalityCheck {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        let slack = if lhs.is_infinite() && lhs > 0.0 {
            f64::INFINITY
        } else {
            lhs - rhs
        };
        Self { lhs, rhs, slack }
    }
}

/// Density of `ω_ψ ∘ T ∘ α`, a state on `A`.
pub fn recovered_state(inst: &InstanceBundle, alpha: &Channel) -> Result<State> {
    State::from_hermitian_part(&alpha.predual_apply(inst.rho_b.density())?)
}

/// `ΔS ≥ −log F(ρ_A, ρ∘T∘α)²`.
pub fn thm2_check(inst: &InstanceBundle, alpha: &Channel) -> Result<InequalityCheck> {
    let rec = recovered_state(inst, alpha)?;
    Ok(InequalityCheck::new(
        inst.delta_s(),
        -2.0 * fidelity(&inst.rho_a, &rec).ln(),
    ))
}

/// `ΔS ≥ (1−s)/s · D_s(ρ∘T∘α | ρ_A)`.
pub fn jensen_check(inst: &InstanceBundle, alpha: &Channel, s: f64) -> Result<InequalityCheck> {
    let rec = recovered_state(inst, alpha)?;
    let d = sandwiched_renyi(&rec, &inst.rho_a, s)?;
    Ok(InequalityCheck::new(inst.delta_s(), (1.0 - s) / s * d))
}

/// `ΔS ≥ ¼ ‖ρ∘T∘α − ρ_A‖₁²`.
pub fn remark3_check(inst: &InstanceBundle, alpha: &Channel) -> Result<InequalityCheck> {
    let rec = recovered_state(inst, alpha)?;
    let d = functional_norm_distance(&rec, &inst.rho_a);
    Ok(InequalityCheck::new(inst.delta_s(), 0.25 * d * d))
}

/// `1/p_θ = (1−2θ)/2 + 2θ/q`.
pub fn p_theta(theta: f64, q: f64) -> f64 {
    1.0 / ((1.0 - 2.0 * theta) / 2.0 + 2.0 * theta / q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub theta: f64,
    pub value: f64,
    pub delta_s: f64,
    pub gap: f64,
}

/// `−(2θ)^{-1} log ‖Γ(θ)‖²_{p_θ,ψ}`, which tends to `ΔS` as `θ → 0⁺`.
pub fn dpi_limit_check(
    inst: &InstanceBundle,
    v_psi: &Intertwiner,
    q: f64,
    theta: f64,
) -> Result<LimitCheck> {
    if !(theta > 0.0 && theta <= 0.1) {
        return Err(Error::InvalidArgument(format!(
            "θ must lie in (0, 0.1], got {theta}"
        )));
    }
    let g = gamma_interior(inst, v_psi, c64(theta, 0.0))?;
    let norm = am_norm(&g, &inst.rho_a, p_theta(theta, q))?;
    let value = -norm.ln() / theta;
    let delta_s = inst.delta_s();
    Ok(LimitCheck {
        theta,
        value,
        delta_s,
        gap: value - delta_s,
    })
}

/// `sin 2πθ / ((1−2θ)(cosh 2πt − cos 2πθ))`.
pub fn hirsch_alpha(theta: f64, t: f64) -> f64 {
    let tp = 2.0 * std::f64::consts::PI;
    (tp * theta).sin() / ((1.0 - 2.0 * theta) * ((tp * t).cosh() - (tp * theta).cos()))
}

/// `sin 2πθ / (2θ(cosh 2πt + cos 2πθ))`.
pub fn hirsch_beta(theta: f64, t: f64) -> f64 {
    let tp = 2.0 * std::f64::consts::PI;
    (tp * theta).sin() / (2.0 * theta * ((tp * t).cosh() + (tp * theta).cos()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HirschCheck {
    pub check: InequalityCheck,
    /// `∫α_θ` and `∫β_θ` over the truncated grid.
    pub alpha_mass: f64,
    pub beta_mass: f64,
    pub certificate_residual: f64,
}

/// `log ‖Γ(θ)‖_{p_θ} ≤ ∫ (1−2θ)α_θ log‖Γ(it)‖ + 2θ β_θ log‖Γ(1/2+it)‖_q`.
///
/// Reported as `lhs = rhs-integral`, `rhs = log ‖Γ(θ)‖_{p_θ}` so that slack ≥ 0.
pub fn hirsch_check(
    inst: &InstanceBundle,
    v_psi: &Intertwiner,
    v_eta: &Intertwiner,
    theta: f64,
    q: f64,
    quad: &QuadratureSpec,
) -> Result<HirschCheck> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "θ must lie in (0, 1/2), got {theta}"
        )));
    }
    let inner = am_norm(
        &gamma_interior(inst, v_psi, c64(theta, 0.0))?,
        &inst.rho_a,
        p_theta(theta, q),
    )?
    .ln();
    let ka = move |t: f64| hirsch_alpha(theta, t);
    let kb = move |t: f64| hirsch_beta(theta, t);
    let lower_edge =
        |t: f64| -> Result<f64> { Ok(gamma_interior(inst, v_psi, c64(0.0, t))?.norm().ln()) };
    let upper_edge = |t: f64| -> Result<f64> {
        Ok(am_norm(&gamma_boundary(inst, v_eta, t), &inst.rho_a, q)?.ln())
    };
    let one = |_: f64| -> Result<f64> { Ok(1.0) };
    let (ia, ca) = integrate_scalar_certified(quad, INTEGRAL_CERT_TOL, ka, &lower_edge)?;
    let (ib, cb) = integrate_scalar_certified(quad, INTEGRAL_CERT_TOL, kb, &upper_edge)?;
    let (ma, _) = integrate_scalar_certified(quad, INTEGRAL_CERT_TOL, ka, &one)?;
    let (mb, _) = integrate_scalar_certified(quad, INTEGRAL_CERT_TOL, kb, &one)?;
    let bound = (1.0 - 2.0 * theta) * ia + 2.0 * theta * ib;
    Ok(HirschCheck {
        check: InequalityCheck::new(bound, inner),
        alpha_mass: ma,
        beta_mass: mb,
        certificate_residual: ca.residual.max(cb.residual),
    })
}

/// Max of `‖Δ^z_A V_ψ Δ^{-z}_B‖` over `Re z ∈ {0, 1/8, .., 1/2}`, `Im z ∈ {−2, .., 2}`.
pub fn lemma1_grid_norm(inst: &InstanceBundle, v_psi: &Intertwiner) -> Result<f64> {
    let vs = v_psi.as_superoperator();
    let mut worst: f64 = 0.0;
    for a in 0..5 {
        for b in 0..5 {
            let z = c64(a as f64 / 8.0, b as f64 - 2.0);
            let da = SuperOperator::sandwich(&inst.sigma_a.power(z), &inst.rho_a.power(-z));
            let db = SuperOperator::sandwich(&inst.sigma_b.power(-z), &inst.rho_b.power(z));
            worst = worst.max(da.compose(&vs.compose(&db)?)?.operator_norm());
        }
    }
    Ok(worst)
}

/// Max of `‖Γ(z)‖` over the same grid, plus the `z = 1/2 + it` edge.
pub fn gamma_grid_norm(inst: &InstanceBundle, v_psi: &Intertwiner) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for a in 0..5 {
        for b in 0..5 {
            let z = c64(a as f64 / 8.0, b as f64 - 2.0);
            worst = worst.max(gamma_interior(inst, v_psi, z)?.norm());
        }
    }
    Ok(worst)
}

/// `‖Γ(0) − ξ^A_ψ‖`.
pub fn gamma_zero_residual(inst: &InstanceBundle, v_psi: &Intertwiner) -> Result<f64> {
    let g = gamma_interior(inst, v_psi, c64(0.0, 0.0))?;
    Ok((g.amplitude - natural_cone_vector(&inst.rho_a).amplitude).norm())
}

/// Max over `t` of `‖Γ_boundary(t) − Γ_interior(1/2+it)‖`.
pub fn boundary_agreement(
    inst: &InstanceBundle,
    v_psi: &Intertwiner,
    v_eta: &Intertwiner,
    ts: &[f64],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in ts {
        let b = gamma_boundary(inst, v_eta, t);
        let i = gamma_interior(inst, v_psi, c64(0.5, t))?;
        worst = worst.max((b.amplitude - i.amplitude).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::fidelity;
    use crate::matcore::{identity, max_abs_diff};
    use crate::recovery::averaged_recovery;
    use crate::sampling::{random_matrix, Prng};
    use rand::SeedableRng;

    fn faithful_instance(seed: u64, n: usize, m: usize, d: usize) -> InstanceBundle {
        let mut rng = Prng::seed_from_u64(seed);
        InstanceBundle::random(n, m, d, None, &mut rng).unwrap()
    }

    fn identity_instance(n: usize, seed: u64) -> InstanceBundle {
        let mut rng = Prng::seed_from_u64(seed);
        let rho = State::new(random_state_density(n, n, &mut rng)).unwrap();
        InstanceBundle::new(Channel::identity(n), rho.clone(), rho).unwrap()
    }

    #[test]
    fn intertwiners_for_identity_channel() {
        let inst = identity_instance(3, 1);
        let v = build_v_psi(&inst).unwrap();
        assert!(max_abs_diff(&v.matrix, &identity(9)) < 1e-10);
        let w = build_v_eta(&inst).unwrap();
        assert!(max_abs_diff(&w.matrix, &identity(9)) < 1e-10);
        for t in [-6.0, -0.5, 0.0, 2.0] {
            let g = gamma_boundary(&inst, &w, t);
            assert!(max_abs_diff(&g.amplitude, &inst.rho_a.sqrt()) < 1e-10);
        }
    }

    #[test]
    fn intertwiners_are_contractions_and_consistent() {
        for seed in 0..30 {
            let inst = faithful_instance(seed, 2 + (seed % 3) as usize, 2 + (seed % 2) as usize, 2);
            let v = build_v_psi(&inst).unwrap();
            let w = build_v_eta(&inst).unwrap();
            assert!(v.norm <= 1.0 + 1e-9 && w.norm <= 1.0 + 1e-9);
            let xb = inst.rho_b.sqrt();
            assert!(max_abs_diff(&v.apply(&xb), &inst.rho_a.sqrt()) < 1e-10);
            assert!(intertwining_residual(&inst, &v, &w) < 1e-8);
        }
    }

    #[test]
    fn singular_rho_intertwiners() {
        let mut rng = Prng::seed_from_u64(5);
        for _ in 0..10 {
            let inst = InstanceBundle::random(3, 3, 2, Some(2), &mut rng).unwrap();
            let v = build_v_psi(&inst).unwrap();
            let w = build_v_eta(&inst).unwrap();
            assert!(v.norm <= 1.0 + 1e-9 && w.norm <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn gamma_constructions_agree() {
        for seed in 10..20 {
            let inst = faithful_instance(seed, 3, 2, 2);
            let v = build_v_psi(&inst).unwrap();
            let w = build_v_eta(&inst).unwrap();
            assert!(gamma_zero_residual(&inst, &v).unwrap() < 1e-12);
            assert!(
                boundary_agreement(&inst, &v, &w, &[-6.0, -2.0, -0.5, 0.0, 0.5, 2.0, 6.0]).unwrap()
                    < 1e-8
            );
            assert!(gamma_grid_norm(&inst, &v).unwrap() <= 1.0 + 1e-9);
            assert!(lemma1_grid_norm(&inst, &v).unwrap() <= 1.0 + 1e-9);
            for t in [-6.0, 0.0, 2.0] {
                let g = gamma_boundary(&inst, &w, t);
                assert!(g.norm() <= 1.0 + 1e-9);
                let gamma = gamma_t_functional(&g).unwrap();
                assert!((gamma.trace() - g.norm().powi(2)).abs() < 1e-12);
                let a = random_matrix(3, 3, &mut Prng::seed_from_u64(seed));
                let direct = g.inner(&g.left_mul(&a));
                assert!((direct - gamma.expectation(&a)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lemma_mon_dominance() {
        for seed in 20..30 {
            let inst = faithful_instance(seed, 3, 3, 2);
            let w = build_v_eta(&inst).unwrap();
            for t in [0.0, 0.5, -0.5, 2.0, -2.0, 4.0, -4.0] {
                assert!(
                    lemma_mon_check(&inst, &w, t).unwrap() >= -1e-9,
                    "seed {seed} t {t}"
                );
            }
        }
        let inst = identity_instance(2, 3);
        let w = build_v_eta(&inst).unwrap();
        assert!(lemma_mon_check(&inst, &w, 1.0).unwrap().abs() < 1e-10);
    }

    #[test]
    fn theorems_on_random_instances() {
        let quad = QuadratureSpec::default();
        for seed in 30..36 {
            let inst = faithful_instance(seed, 3, 2, 2);
            let ds = inst.delta_s();
            let w = build_v_eta(&inst).unwrap();
            let mut prev = f64::INFINITY;
            for q in [1.0, 1.5, 2.0] {
                let (rhs, cert) = thm1_rhs(&inst, &w, q, &quad).unwrap();
                assert!(ds - rhs >= -1e-6, "q={q}");
                assert!(cert.residual < 1e-10);
                assert!(rhs <= prev + 1e-9);
                prev = rhs;
                if q == 2.0 {
                    assert!(rhs >= -1e-12);
                }
            }
            let (alpha, _) = averaged_recovery(&inst.recovery_spec(quad).unwrap()).unwrap();
            assert!(thm2_check(&inst, &alpha).unwrap().slack >= -1e-6);
            assert!(remark3_check(&inst, &alpha).unwrap().slack >= -1e-6);
            for s in [0.6, 0.75, 0.9] {
                assert!(jensen_check(&inst, &alpha, s).unwrap().slack >= -1e-6);
            }
            let (m1, _) = main1_rhs(&inst, &quad).unwrap();
            assert!(ds - m1 >= -1e-6);
            let (t1, _) = thm1_rhs(&inst, &w, 1.0, &quad).unwrap();
            assert!(t1 - m1 >= -1e-8, "thm1(q=1) {t1} vs main1 {m1}");
        }
    }

    #[test]
    fn thm1_q1_integrand_is_fidelity() {
        let inst = faithful_instance(40, 3, 2, 2);
        let w = build_v_eta(&inst).unwrap();
        for t in [-1.0, 0.3, 2.5] {
            let g = gamma_boundary(&inst, &w, t);
            let gamma = gamma_t_functional(&g).unwrap();
            let a = am_norm(&g, &inst.rho_a, 1.0).unwrap();
            assert!((a - fidelity(&gamma, &inst.rho_a)).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_channel_checks_are_tight() {
        let inst = identity_instance(3, 50);
        let quad = QuadratureSpec::default();
        let v = build_v_psi(&inst).unwrap();
        let w = build_v_eta(&inst).unwrap();
        let (rhs, _) = thm1_rhs(&inst, &w, 1.5, &quad).unwrap();
        assert!(rhs.abs() < 1e-10);
        let alpha = Channel::identity(3);
        let c = thm2_check(&inst, &alpha).unwrap();
        assert!(c.lhs.abs() < 1e-12 && c.rhs.abs() < 1e-10);
        let l = dpi_limit_check(&inst, &v, 1.0, 0.01).unwrap();
        assert!(l.value.abs() < 1e-10);
        let h = hirsch_check(&inst, &v, &w, 0.25, 1.0, &quad).unwrap();
        assert!(h.check.lhs.abs() < 1e-10 && h.check.rhs.abs() < 1e-10);
    }

    #[test]
    fn limit_identity_converges() {
        for seed in 60..66 {
            let inst = faithful_instance(seed, 3, 2, 2);
            let v = build_v_psi(&inst).unwrap();
            for q in [1.0, 2.0] {
                let coarse = dpi_limit_check(&inst, &v, q, 1e-2).unwrap();
                let fine = dpi_limit_check(&inst, &v, q, 1e-3).unwrap();
                assert!(fine.gap.abs() < coarse.gap.abs());
                assert!(fine.gap.abs() <= 1e-2 * (1.0 + fine.delta_s.abs()));
            }
        }
        let inst = faithful_instance(1, 2, 2, 1);
        let v = build_v_psi(&inst).unwrap();
        assert!(dpi_limit_check(&inst, &v, 1.0, 0.2).is_err());
        assert!(dpi_limit_check(&inst, &v, 1.0, 0.0).is_err());
    }

    #[test]
    fn hirsch_bound_and_kernels() {
        let quad = QuadratureSpec::default();
        for seed in 70..74 {
            let inst = faithful_instance(seed, 3, 2, 2);
            let v = build_v_psi(&inst).unwrap();
            let w = build_v_eta(&inst).unwrap();
            for theta in [0.1, 0.25, 0.4] {
                for q in [1.0, 2.0] {
                    let h = hirsch_check(&inst, &v, &w, theta, q, &quad).unwrap();
                    assert!(h.check.slack >= -1e-6, "θ={theta} q={q}: {:?}", h.check);
                    assert!(
                        (h.alpha_mass - 1.0).abs() < 1e-10 && (h.beta_mass - 1.0).abs() < 1e-10
                    );
                }
            }
        }
    }

    #[test]
    fn first_law_trend() {
        let mut rng = Prng::seed_from_u64(80);
        let psi = State::new(random_state_density(3, 3, &mut rng)).unwrap();
        let xi = natural_cone_vector(&psi);
        let dir = random_matrix(3, 3, &mut rng);
        let q = 1.0;
        let value = |theta: f64| {
            let z = &xi.amplitude + dir.scale(theta);
            let z = z.unscale(z.norm());
            am_norm(&GnsVector::new(z).unwrap(), &psi, p_theta(theta, q))
                .unwrap()
                .ln()
                / theta
        };
        let a = value(1e-2).abs();
        let b = value(1e-3).abs();
        let c = value(1e-4).abs();
        assert!(b < a && c < b && c < 1e-2);
    }
}
