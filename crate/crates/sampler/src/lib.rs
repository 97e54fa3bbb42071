//! MCMC for Gibbs and semi-modular posteriors.

pub mod chain;
pub mod error;
pub mod mwg;
pub mod rwm;
pub mod smi;
pub mod ssm;

pub use chain::{ess_ips, Chain, ChainConfig};
pub use error::{Result, SamplerError};
pub use mwg::{metropolis_within_gibbs, CoordTarget};
pub use rwm::{adaptive_rwm, back_transform, log_transformed};
pub use smi::{smi_two_stage_sample, SmiDraws};
pub use ssm::{ssm_conditional_moments, ssm_conditional_theta};

pub type ChainF64 = Chain<f64>;
pub type ChainF32 = Chain<f32>;
