//! Test-data evaluation of calibrated belief updates: risk ratios, high-precision
//! optimal hyperparameters, replicate studies and concentration diagnostics.

pub mod criteria;
pub mod diagnostics;
pub mod error;
pub mod reference;
pub mod risk;
pub mod ssm;
pub mod study;

pub use diagnostics::{
    concentration_diagnostics, sup_distance, ConcentrationDiagnostics, GammaFit,
};
pub use error::{EvalError, Result};
pub use reference::{high_precision_optimal_s, OptimalS};
pub use risk::{risk_ratio_pooled, risk_ratio_product, RatioKind, RiskRatioReport};
pub use ssm::{
    anchor_pairs, AnchorPair, AnchorStats, ChainBudget, EtaBetaKernel, EtaBetaState, Phi2Posterior,
    SsmEta,
};
pub use study::{
    config_hash, mixture_split_study, ssm_replicate, ssm_replicate_study, MixtureStudy,
    MixtureStudyConfig, ReplicateRecord, ReplicateStudy, SsmStudyConfig,
};
