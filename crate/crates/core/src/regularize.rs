//! Gaussian regularization `ψ_P ∝ ĝ_P(log Δ_{σ,ρ}) ξ_ρ`, `ĝ_P(x) = e^{−x²/2P}`.
//!
//! With `σ = Σ s_i P_i` and `ρ = Σ r_j Q_j`, `Δ_{σ,ρ}` has eigenvectors
//! `P_i X Q_j` with eigenvalues `s_i/r_j`, and `ĝ_P(log Δ) ξ_ρ = a_P ξ_ρ` for
//! `a_P = Σ_ij ĝ_P(log s_i − log r_j) P_i Q_j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{min_eigenvalue, operator_norm, CMatrix, SuperOperator};
use crate::quantum::{
    majorization_constant, natural_cone_vector, relative_entropy, GnsVector, State,
};

pub const DEFAULT_P_GRID: [f64; 5] = [1.0, 4.0, 16.0, 64.0, 256.0];

/// `e^{−x²/(2P)}`.
pub fn g_hat(p: f64, x: f64) -> f64 {
    (-x * x / (2.0 * p)).exp()
}

#[derive(Debug, Clone)]
pub struct RegularizedState {
    pub p: f64,
    /// `a_P` before normalization; `ψ_P = a_P ξ_ρ / ‖a_P ξ_ρ‖`.
    pub a_p: CMatrix,
    pub vector: GnsVector,
    pub state: State,
    /// `‖a_P ξ_ρ‖`.
    pub scale: f64,
    pub majorization: f64,
}

pub fn gaussian_regularize(rho: &State, sigma: &State, p: f64) -> Result<RegularizedState> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "P must be positive, got {p}"
        )));
    }
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            context: "gaussian_regularize",
            expected: sigma.dim(),
            got: rho.dim(),
        });
    }
    if rho.mass_outside_support_of(sigma) > crate::quantum::SUPPORT_MASS_TOL {
        return Err(Error::SupportViolation("supp ρ ⊄ supp σ".into()));
    }
    let n = rho.dim();
    let (ss, rs) = (sigma.spectrum(), rho.spectrum());
    let mut a = CMatrix::zeros(n, n);
    for i in (0..n).filter(|&i| ss.in_support(i)) {
        let u = ss.eigenvectors.column(i);
        for j in (0..n).filter(|&j| rs.in_support(j)) {
            let v = rs.eigenvectors.column(j);
            let w = g_hat(p, ss.eigenvalues[i].ln() - rs.eigenvalues[j].ln());
            // P_i Q_j = |u_i⟩⟨u_i|v_j⟩⟨v_j|
            let overlap = u.dotc(&v);
            a += (u * v.adjoint()) * (overlap * w);
        }
    }
    let raw = &a * rho.sqrt();
    let scale = raw.norm();
    if scale == 0.0 {
        return Err(Error::InvalidArgument("regularized vector vanishes".into()));
    }
    let vector = GnsVector::new(raw.unscale(scale))?;
    let state = vector.functional()?;
    let majorization = majorization_constant(&state, sigma);
    Ok(RegularizedState {
        p,
        a_p: a,
        vector,
        state,
        scale,
        majorization,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub p: f64,
    pub entropy: f64,
    pub gap: f64,
}

/// `(P, S(ψ_P|σ), |S(ψ_P|σ) − S(ρ|σ)|)` over the grid.
pub fn regularized_entropy_convergence(
    rho: &State,
    sigma: &State,
    grid: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    let target = relative_entropy(rho, sigma);
    if !target.is_finite() {
        return Err(Error::SupportViolation("S(ρ|σ) is infinite".into()));
    }
    grid.iter()
        .map(|&p| {
            let r = gaussian_regularize(rho, sigma, p)?;
            let entropy = relative_entropy(&r.state, sigma);
            Ok(ConvergenceRow {
                p,
                entropy,
                gap: (entropy - target).abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationReport {
    pub a_norm: f64,
    /// `‖ψ_P‖·‖a_P ξ_ρ‖ − a_P ξ_ρ`, max entry.
    pub factor_residual: f64,
    pub majorization: f64,
    /// Min eigenvalue of the dominance difference over the sampled `α`.
    pub dominance_min_eig: f64,
}

/// Regularization invariants at one `P`: `‖a_P‖ ≤ 1`, `ψ_P = a_P ξ_ρ` up to scale,
/// finite `c_P`, and `Δ^α_{ψ_P,σ} ≥ ‖a_P ξ_ρ‖^{−2α} a_P Δ^α_{ρ,σ} a_P†`
/// for `α ∈ {1/4, 1/2, 3/4}`.
pub fn regularization_invariants(
    rho: &State,
    sigma: &State,
    p: f64,
) -> Result<RegularizationReport> {
    let r = gaussian_regularize(rho, sigma, p)?;
    let a_norm = operator_norm(&r.a_p);
    let lhs = r.vector.amplitude.scale(r.scale);
    let rhs = &r.a_p * natural_cone_vector(rho).amplitude;
    let factor_residual = crate::matcore::max_abs_diff(&lhs, &rhs);
    let mut worst = f64::INFINITY;
    let n2 = r.scale * r.scale;
    for alpha in [0.25, 0.5, 0.75] {
        let right = sigma.real_power(-alpha);
        let left_p = r.state.real_power(alpha);
        let left = (&r.a_p * rho.real_power(alpha) * r.a_p.adjoint()).scale(n2.powf(-alpha));
        let diff = SuperOperator::sandwich(&left_p, &right).matrix
            - SuperOperator::sandwich(&left, &right).matrix;
        worst = worst.min(min_eigenvalue(&diff));
    }
    Ok(RegularizationReport {
        a_norm,
        factor_residual,
        majorization: r.majorization,
        dominance_min_eig: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::max_abs_diff;
    use crate::sampling::{random_state_density, Prng};
    use rand::SeedableRng;

    fn rs(n: usize, rank: usize, rng: &mut Prng) -> State {
        State::new(random_state_density(n, rank, rng)).unwrap()
    }

    #[test]
    fn equal_states_are_fixed() {
        let mut rng = Prng::seed_from_u64(1);
        let rho = rs(3, 3, &mut rng);
        for p in DEFAULT_P_GRID {
            let r = gaussian_regularize(&rho, &rho, p).unwrap();
            assert!(max_abs_diff(&r.vector.amplitude, &rho.sqrt()) < 1e-10);
        }
        let rows = regularized_entropy_convergence(&rho, &rho, &DEFAULT_P_GRID).unwrap();
        assert!(rows
            .iter()
            .all(|r| r.entropy.abs() < 1e-10 && r.gap < 1e-10));
    }

    #[test]
    fn vector_converges_monotonically() {
        let mut rng = Prng::seed_from_u64(2);
        for _ in 0..10 {
            let rho = rs(3, 3, &mut rng);
            let sigma = rs(3, 3, &mut rng);
            let xi = rho.sqrt();
            let dists: Vec<f64> = DEFAULT_P_GRID
                .iter()
                .map(|&p| {
                    (gaussian_regularize(&rho, &sigma, p)
                        .unwrap()
                        .vector
                        .amplitude
                        - &xi)
                        .norm()
                })
                .collect();
            assert!(dists.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{dists:?}");
            for p in DEFAULT_P_GRID {
                assert!(gaussian_regularize(&rho, &sigma, p)
                    .unwrap()
                    .majorization
                    .is_finite());
            }
        }
    }

    #[test]
    fn invariants_hold_along_p() {
        let mut rng = Prng::seed_from_u64(3);
        for k in 0..20 {
            let rho = rs(3, 1 + k % 3, &mut rng);
            let sigma = rs(3, 3, &mut rng);
            for p in [1.0, 16.0, 256.0] {
                let rep = regularization_invariants(&rho, &sigma, p).unwrap();
                assert!(rep.a_norm <= 1.0 + 1e-9);
                assert!(rep.factor_residual < 1e-9);
                assert!(rep.majorization.is_finite());
                assert!(rep.dominance_min_eig >= -1e-8, "{rep:?}");
            }
        }
    }

    #[test]
    fn entropy_gap_shrinks() {
        let mut rng = Prng::seed_from_u64(4);
        for k in 0..10 {
            let rho = rs(2, 1 + k % 2, &mut rng);
            let sigma = rs(2, 2, &mut rng);
            let rows = regularized_entropy_convergence(&rho, &sigma, &DEFAULT_P_GRID).unwrap();
            assert!(
                rows.windows(2).all(|w| w[1].gap <= w[0].gap + 1e-12),
                "{rows:?}"
            );
            // Asymptotically the gap falls like 1/P.
            let ratio = rows[3].gap / rows[4].gap.max(1e-300);
            assert!(
                rows[4].gap < 1e-12 || (2.5..6.0).contains(&ratio),
                "{rows:?}"
            );
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut rng = Prng::seed_from_u64(5);
        let rho = rs(2, 2, &mut rng);
        let sigma = rs(2, 1, &mut rng);
        assert!(gaussian_regularize(&rho, &sigma, 1.0).is_err());
        assert!(gaussian_regularize(&rho, &rho, 0.0).is_err());
    }
}
