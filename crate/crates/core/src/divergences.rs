//! Fidelity, Araki–Masuda `L_q` norms relative to the commutant, sandwiched
//! Rényi divergences and trace-norm distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{singular_values, trace_norm, CMatrix};
use crate::quantum::{natural_cone_vector, GnsVector, State};

/// `F(ρ, τ) = ‖ρ^{1/2} τ^{1/2}‖_1 = Tr[(τ^{1/2} ρ τ^{1/2})^{1/2}]`.
pub fn fidelity(rho: &State, tau: &State) -> f64 {
    trace_norm(&(rho.sqrt() * tau.sqrt()))
}

fn check_q(q: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&q) {
        return Err(Error::InvalidArgument(format!(
            "q must lie in [1, 2], got {q}"
        )));
    }
    Ok(())
}

/// `Tr[(Y Y†)^p] = Σ s_i(Y)^{2p}`; singular values stay accurate near rank deficiency.
fn gram_trace_power(y: &CMatrix, p: f64) -> f64 {
    singular_values(y)
        .iter()
        .map(|&x| if x > 0.0 { x.powf(2.0 * p) } else { 0.0 })
        .sum()
}

/// `‖ζ‖_{q,ψ}` with `‖ζ‖^q = Tr[(ρ_ψ^r ζζ† ρ_ψ^r)^{q/2}]`, `r = (2−q)/(2q)`.
///
/// Pseudo-powers are used on `supp ρ_ψ`; the part of `ζ` outside that support
/// is dropped for `q < 2` (see [`support_violation`]). `q = 2` returns `‖ζ‖`.
pub fn am_norm(zeta: &GnsVector, psi: &State, q: f64) -> Result<f64> {
    check_q(q)?;
    if zeta.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            context: "am_norm",
            expected: psi.dim(),
            got: zeta.dim(),
        });
    }
    if q == 2.0 {
        return Ok(zeta.norm());
    }
    let r = (2.0 - q) / (2.0 * q);
    let y = psi.real_power(r) * &zeta.amplitude;
    Ok(gram_trace_power(&y, q / 2.0).powf(1.0 / q))
}

/// Weight of `ω_ζ` outside `supp ρ_ψ`.
pub fn support_violation(zeta: &GnsVector, psi: &State) -> f64 {
    let p = psi.support_projection();
    (zeta.norm().powi(2) - (&p * zeta.density()).trace().re).max(0.0)
}

/// `D_s(ρ|σ) = (s−1)^{-1} log Tr[(σ^r ρ σ^r)^s]`, `r = (1−s)/(2s)`, `s ∈ (1/2, 1)`.
///
/// Infinite only when the trace vanishes (orthogonal supports).
pub fn sandwiched_renyi(rho: &State, sigma: &State, s: f64) -> Result<f64> {
    if !(s > 0.5 && s < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "s must lie in (1/2, 1), got {s}"
        )));
    }
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            context: "sandwiched_renyi",
            expected: sigma.dim(),
            got: rho.dim(),
        });
    }
    let r = (1.0 - s) / (2.0 * s);
    let y = sigma.real_power(r) * rho.sqrt();
    let q = gram_trace_power(&y, s);
    if q <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(q.ln() / (s - 1.0))
}

/// `‖ρ − τ‖_1`.
pub fn functional_norm_distance(rho: &State, tau: &State) -> f64 {
    trace_norm(&(rho.density() - tau.density()))
}

/// `(|⟨ζ, ξ_ψ⟩|, ‖ζ‖_{p,ψ}, ‖ρ_ψ^r ζ (ζ†ζ)^{-r}‖)` with `r = 1/p − 1/2`.
pub fn squeeze_bounds(zeta: &GnsVector, psi: &State, p: f64) -> Result<(f64, f64, f64)> {
    let lower = zeta.inner(&natural_cone_vector(psi)).norm();
    let value = am_norm(zeta, psi, p)?;
    let r = 1.0 / p - 0.5;
    let right = State::from_hermitian_part(&zeta.commutant_density())?;
    let upper = (psi.real_power(r) * &zeta.amplitude * right.real_power(-r)).norm();
    Ok((lower, value, upper))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DivergenceKind {
    Fidelity,
    AmNorm { q: f64 },
    Sandwiched { s: f64 },
    TraceDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub kind: DivergenceKind,
    pub value: f64,
}

impl Divergence {
    /// Evaluates `kind` on `(ρ, τ)`; the AM norm uses `ζ = ξ_ρ` and `ψ = τ`.
    pub fn evaluate(kind: DivergenceKind, rho: &State, tau: &State) -> Result<Self> {
        let value = match kind {
            DivergenceKind::Fidelity => fidelity(rho, tau),
            DivergenceKind::AmNorm { q } => am_norm(&natural_cone_vector(rho), tau, q)?,
            DivergenceKind::Sandwiched { s } => sandwiched_renyi(rho, tau, s)?,
            DivergenceKind::TraceDistance => functional_norm_distance(rho, tau),
        };
        Ok(Self { kind, value })
    }
}
