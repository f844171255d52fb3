//! Closed-form instances: the identity channel, the inclusion into a tensor
//! product with its conditional expectation, and Davies semigroups.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{conditional_expectation_pair, random_davies, semigroup_step, Channel};
use crate::error::{Error, Result};
use crate::gamma::{thm2_check, InequalityCheck, InstanceBundle};
use crate::matcore::{identity, kron};
use crate::quadrature::QuadratureSpec;
use crate::quantum::{relative_entropy, State};
use crate::recovery::{averaged_recovery, rotated_petz, theta_conjugate, RecoverySpec};
use crate::sampling::random_state_density;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureName {
    ConditionalExpectation,
    Davies,
    Identity,
}

impl FixtureName {
    pub const ALL: [FixtureName; 3] = [Self::ConditionalExpectation, Self::Davies, Self::Identity];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ConditionalExpectation => "conditional-expectation",
            Self::Davies => "davies",
            Self::Identity => "identity",
        }
    }
}

impl std::str::FromStr for FixtureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown fixture {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondExpReport {
    /// Choi distance between the averaged recovery of `ι` and `E`.
    pub choi_distance: f64,
    /// `S(ρ|σ∘E) − S(ρ_B|σ_B)`.
    pub chain_lhs: f64,
    /// `S(ρ|ρ∘E)`.
    pub chain_rhs: f64,
    pub certificate_residual: f64,
}

/// Inclusion `M_{n_b} → M_{n_b} ⊗ M_{n_e}` with an `E`-invariant reference
/// state `σ = σ_B ⊗ 1/n_e` and a random `ρ` of the given rank.
pub fn conditional_expectation_fixture<R: Rng + ?Sized>(
    n_b: usize,
    n_e: usize,
    rank: usize,
    quad: QuadratureSpec,
    rng: &mut R,
) -> Result<CondExpReport> {
    let (iota, e) = conditional_expectation_pair(n_b, n_e);
    let n = n_b * n_e;
    let sigma_b = random_state_density(n_b, n_b, rng);
    let sigma = State::new(kron(&sigma_b, &identity(n_e).unscale(n_e as f64)))?;
    let rho = State::new(random_state_density(n, rank.clamp(1, n), rng))?;

    let spec = RecoverySpec::new(iota.clone(), sigma.clone(), quad)?;
    let (alpha, cert) = averaged_recovery(&spec)?;

    // States on B are restrictions along ι; composing with E lifts them back to A.
    let sigma_b = State::from_hermitian_part(&iota.predual_apply(sigma.density())?)?;
    let rho_b = State::from_hermitian_part(&iota.predual_apply(rho.density())?)?;
    let sigma_e = State::from_hermitian_part(&e.predual_apply(sigma_b.density())?)?;
    let rho_e = State::from_hermitian_part(&e.predual_apply(rho_b.density())?)?;
    Ok(CondExpReport {
        choi_distance: alpha.choi_distance(&e),
        chain_lhs: relative_entropy(&rho, &sigma_e) - relative_entropy(&rho_b, &sigma_b),
        chain_rhs: relative_entropy(&rho, &rho_e),
        certificate_residual: cert.residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DaviesReport {
    pub n: usize,
    pub beta: f64,
    pub t: f64,
    /// Max Choi distance of `α^u` (sampled `u`) and of the averaged map to `Θ∘T_t∘Θ`.
    pub rotation_distance: f64,
    /// `S(ρ|σ) − S(ρ∘T_t|σ) ≥ −2 log F(ρ∘T_t∘ΘT_tΘ, ρ)`.
    pub bound: InequalityCheck,
    pub certificate_residual: f64,
}

pub const DAVIES_ROTATION_SAMPLES: [f64; 4] = [-4.0, -0.5, 0.0, 2.0];

pub fn davies_fixture<R: Rng + ?Sized>(
    n: usize,
    beta: f64,
    t: f64,
    rank: usize,
    quad: QuadratureSpec,
    rng: &mut R,
) -> Result<DaviesReport> {
    let semigroup = random_davies(n, beta, 2, rng)?;
    let tt = semigroup_step(&semigroup, t)?;
    let target = theta_conjugate(&tt, &semigroup.theta_basis)?;
    let spec = RecoverySpec::new(tt.clone(), semigroup.sigma.clone(), quad)?;
    let mut worst: f64 = 0.0;
    for u in DAVIES_ROTATION_SAMPLES {
        worst = worst.max(rotated_petz(&spec, u)?.choi_distance(&target));
    }
    let (alpha, cert) = averaged_recovery(&spec)?;
    worst = worst.max(alpha.choi_distance(&target));

    let rho = State::new(random_state_density(n, rank.clamp(1, n), rng))?;
    let inst = InstanceBundle::new(tt, rho, semigroup.sigma.clone())?;
    Ok(DaviesReport {
        n,
        beta,
        t,
        rotation_distance: worst,
        bound: thm2_check(&inst, &target)?,
        certificate_residual: cert.residual,
    })
}

/// `T = id` on `M_n` with random states; every inequality is tight.
pub fn identity_instance<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<InstanceBundle> {
    let rho = State::new(random_state_density(n, n, rng))?;
    let sigma = State::new(random_state_density(n, n, rng))?;
    InstanceBundle::new(Channel::identity(n), rho, sigma)
}
