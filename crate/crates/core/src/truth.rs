//! Generative settings for the synthetic examples.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Two-module normal example with an unmodelled outlier component in module 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixtureTruth {
    pub phi_star: f64,
    pub theta_star: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub lambda_star: f64,
    pub s_theta_sq: f64,
}

impl Default for MixtureTruth {
    fn default() -> Self {
        Self {
            phi_star: 0.0,
            theta_star: 6.0,
            sigma1_sq: 16.0,
            sigma2_sq: 1.0,
            lambda_star: 0.9,
            s_theta_sq: 0.33 * 0.33,
        }
    }
}

impl MixtureTruth {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma1_sq > 0.0 && self.sigma2_sq > 0.0 && self.s_theta_sq > 0.0) {
            return Err(CoreError::ParameterDomain(
                "mixture variances must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.lambda_star) {
            return Err(CoreError::ParameterDomain(format!(
                "lambda* = {} outside [0, 1]",
                self.lambda_star
            )));
        }
        Ok(())
    }
}

/// AR(1) latent process with anchor-dependent emission noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsmTruth {
    pub nu: f64,
    pub sigma_ar: f64,
    pub phi_a_star: f64,
    pub phi_m_star: f64,
    pub invgamma_a: f64,
    pub invgamma_b: f64,
}

impl Default for SsmTruth {
    fn default() -> Self {
        Self {
            nu: 0.5,
            sigma_ar: 0.7,
            phi_a_star: 1.0,
            phi_m_star: 0.7,
            invgamma_a: 2.0,
            invgamma_b: 1.0,
        }
    }
}

impl SsmTruth {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu.abs() < 1.0) {
            return Err(CoreError::ParameterDomain(format!(
                "|nu| = {} must be below 1",
                self.nu.abs()
            )));
        }
        if !(self.sigma_ar > 0.0 && self.phi_a_star > 0.0 && self.phi_m_star > 0.0) {
            return Err(CoreError::ParameterDomain(
                "state-space scales must be positive".into(),
            ));
        }
        if !(self.invgamma_a > 0.0 && self.invgamma_b > 0.0) {
            return Err(CoreError::ParameterDomain(
                "inverse-gamma prior needs positive shape and rate".into(),
            ));
        }
        Ok(())
    }

    /// Stationary variance `σ² / (1 - ν²)`.
    pub fn stationary_var(&self) -> f64 {
        self.sigma_ar * self.sigma_ar / (1.0 - self.nu * self.nu)
    }
}
