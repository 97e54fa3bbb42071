//! Loss functions entering Gibbs posteriors `π_s(φ | x) ∝ exp(-ℓ_s(φ; x)) π(φ)`.
//!
//! All losses are returned on the log scale and never exponentiated here.

pub mod error;
pub mod loss;
pub mod model;
pub mod smi;
pub mod spec;
pub mod ssm;

pub use error::{LossError, Result};
pub use loss::{beta_loss, beta_loss_centered, beta_loss_grad, neg_log_lik};
pub use model::{
    normal_power_integral, power_integral, IntegralMethod, NormalKnownVar, NormalMeanVar,
    ObservationModel, ShiftedNormal,
};
pub use smi::{
    log_marginal, smi_loss_eta, smi_loss_eta_beta, smi_loss_gamma, Marginalizer, MixtureSuspect,
    SuspectModule,
};
pub use spec::{LossKind, LossSpec};
pub use ssm::SsmModel;
