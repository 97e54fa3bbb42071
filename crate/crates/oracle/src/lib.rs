//! Deterministic reference computations used as oracles by the calibration
//! crates: conjugate normal power posteriors, the two-module normal model
//! under η-SMI and γ-SMI, and Laplace/AGHQ marginals.

pub mod conjugate;
pub mod error;
pub mod marginal;
pub mod mixture;
pub mod special;

pub use conjugate::{
    ig_prior_from_moments, interior_probability, ConjObjective, ConjStats, InteriorRow, OptimalR,
    PowerPosterior, StudentT, INTERIOR_TABLE_PRIORS, R_MAX,
};
pub use error::{OracleError, Result};
pub use marginal::{
    aghq, aghq_auto, laplace_at_likelihood_mode, newton_minimize, numerical_hessian,
};
pub use mixture::{argmin_unit, tv_distance, Gaussian, MixtureStats, SmiKind};
