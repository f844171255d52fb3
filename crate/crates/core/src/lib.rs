//! Finite-dimensional recovery channels and strengthened data-processing checks.
//!
//! States live on `M_n` in standard form: vectors are `n×n` matrices with the
//! Hilbert–Schmidt inner product, channels act in the Heisenberg picture and
//! their preduals act on densities.

pub mod channels;
pub mod divergences;
pub mod error;
pub mod fixtures;
pub mod gamma;
pub mod harness;
pub mod matcore;
pub mod quadrature;
pub mod quantum;
pub mod recovery;
pub mod regularize;
pub mod sampling;

pub use channels::{Channel, ChannelFlags, Semigroup};
pub use error::{Error, Result};
pub use gamma::{InequalityCheck, InstanceBundle, Intertwiner};
pub use harness::{ExperimentConfig, Status, TrialRecord};
pub use matcore::{CMatrix, CVector, SuperOperator, C64};
pub use quadrature::{Certificate, QuadratureSpec};
pub use quantum::{GnsVector, State};
pub use recovery::RecoverySpec;
pub use regularize::RegularizedState;
pub use sampling::Prng;
