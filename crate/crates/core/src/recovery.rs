//! KMS (Petz) adjoint, rotated Petz maps and the `p(t)`-averaged recovery channel.
//!
//! For `T: M_m → M_n` and a reference state `σ_A` on `M_n`, with
//! `σ_B = σ_A ∘ T`:
//!
//! ```text
//! T⁺(a)  = σ_B^{-1/2} T*(σ_A^{1/2} a σ_A^{1/2}) σ_B^{-1/2}
//! α^t(a) = σ_B^{it} T⁺(σ_A^{-it} a σ_A^{it}) σ_B^{-it}
//! α      = ∫ p(t) α^t dt
//! ```
//!
//! Singular reference states are handled with pseudo-powers, which compresses
//! everything to the supports; such channels carry `support_reduced`.

use crate::channels::{theta_apply, Channel};
use crate::error::{Error, Result};
use crate::matcore::{CMatrix, SuperOperator};
use crate::quadrature::{
    averaging_density, integrate_matrix_certified, Certificate, QuadratureSpec,
};
use crate::quantum::State;

/// Certificate tolerance for the averaged recovery channel (max Choi entry change).
pub const RECOVERY_CERT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct RecoverySpec {
    pub channel: Channel,
    pub sigma_a: State,
    pub sigma_b: State,
    pub quadrature: QuadratureSpec,
}

impl RecoverySpec {
    pub fn new(channel: Channel, sigma_a: State, quadrature: QuadratureSpec) -> Result<Self> {
        if sigma_a.dim() != channel.out_dim() {
            return Err(Error::DimensionMismatch {
                context: "RecoverySpec::new (σ_A)",
                expected: channel.out_dim(),
                got: sigma_a.dim(),
            });
        }
        quadrature.validate()?;
        let sigma_b = channel.predual_state(&sigma_a)?;
        Ok(Self {
            channel,
            sigma_a,
            sigma_b,
            quadrature,
        })
    }

    pub fn support_reduced(&self) -> bool {
        !self.sigma_a.is_faithful() || !self.sigma_b.is_faithful()
    }

    fn kms_superop(&self) -> Result<SuperOperator> {
        let sa = self.sigma_a.real_power(0.5);
        let sb = self.sigma_b.real_power(-0.5);
        let inner = SuperOperator::sandwich(&sa, &sa);
        let outer = SuperOperator::sandwich(&sb, &sb);
        outer.compose(&self.channel.hs_adjoint().compose(&inner)?)
    }

    fn rotated_superop(&self, kms: &SuperOperator, t: f64) -> Result<SuperOperator> {
        let a_in = SuperOperator::sandwich(
            &self.sigma_a.imaginary_power(-t),
            &self.sigma_a.imaginary_power(t),
        );
        let b_out = SuperOperator::sandwich(
            &self.sigma_b.imaginary_power(t),
            &self.sigma_b.imaginary_power(-t),
        );
        b_out.compose(&kms.compose(&a_in)?)
    }

    fn wrap(&self, s: SuperOperator) -> Channel {
        let mut c = Channel::from_superoperator(s).certified();
        c.flags.support_reduced = self.support_reduced();
        c
    }
}

/// `T⁺` with respect to `σ_A`.
pub fn kms_adjoint(channel: &Channel, sigma_a: &State) -> Result<Channel> {
    let spec = RecoverySpec::new(channel.clone(), sigma_a.clone(), QuadratureSpec::default())?;
    Ok(spec.wrap(spec.kms_superop()?))
}

/// `α^t = ς^t_{σ_B} ∘ T⁺ ∘ ς^{-t}_{σ_A}`.
pub fn rotated_petz(spec: &RecoverySpec, t: f64) -> Result<Channel> {
    let kms = spec.kms_superop()?;
    Ok(spec.wrap(spec.rotated_superop(&kms, t)?))
}

/// `∫ p(t) α^t dt` by composite Gauss–Legendre, certified by node doubling.
pub fn averaged_recovery(spec: &RecoverySpec) -> Result<(Channel, Certificate)> {
    let kms = spec.kms_superop()?;
    let (m, n) = (spec.channel.in_dim(), spec.channel.out_dim());
    let f = |t: f64| spec.rotated_superop(&kms, t).map(|s| s.matrix);
    let (mat, cert) =
        integrate_matrix_certified(&spec.quadrature, RECOVERY_CERT_TOL, averaging_density, &f)?;
    let s = SuperOperator::from_matrix(n, m, mat)?;
    Ok((spec.wrap(s), cert))
}

/// `Θ ∘ T ∘ Θ` for `T` on `M_n`, with `Θ` complex conjugation in `basis`.
pub fn theta_conjugate(channel: &Channel, basis: &CMatrix) -> Result<Channel> {
    let n = basis.nrows();
    if channel.in_dim() != n || channel.out_dim() != n {
        return Err(Error::DimensionMismatch {
            context: "theta_conjugate",
            expected: n,
            got: channel.in_dim(),
        });
    }
    let c = Channel::from_fn(n, n, |a| {
        let inner = channel
            .apply(&theta_apply(basis, a))
            .expect("dimension checked");
        theta_apply(basis, &inner)
    });
    Ok(c.certified())
}
