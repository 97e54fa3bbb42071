//! Calibration of the hyperparameter `s` of a generalised Bayes posterior.
//!
//! A lattice over `s` is scored by the log predictive of held-out data, smoothed by
//! splines into a posterior over `s`, and summarised by point estimators. Nested
//! MCMC gives an alternative sampler when lattice evaluation is too costly.

pub mod error;
pub mod estimators;
pub mod grid;
pub mod nested;
pub mod posterior;
pub mod predictive;
pub mod prior;
pub mod surface;

pub use error::{HypercalError, Result};
pub use estimators::{
    harmonic_mean, kl_estimator, posterior_mean, posterior_mode, waic, waic_estimator,
    EstimatorSet, KlConfig, KlEstimate, PointEstimate, WaicValue,
};
pub use grid::{Axis, SGrid, DEFAULT_POINTS};
pub use nested::{nested_mcmc_pooled, nested_mcmc_product, InnerKernel, NestedConfig, NestedDraws};
pub use posterior::{
    build_grid_posterior, build_zoomed_posterior, GridPosterior, LatticeValue, PointMass,
    PosteriorKind, SDistribution,
};
pub use predictive::{
    log_pointwise_predictive, log_pooled_predictive, LogLikTable, Pointwise, Pooled,
};
pub use prior::{AxisPrior, SPrior};
pub use surface::Surface;
