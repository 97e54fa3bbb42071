//! Hyperparameter points.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// One coordinate direction of the hyperparameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SAxis {
    Eta,
    Beta,
    B,
    Gamma,
}

impl SAxis {
    pub fn name(self) -> &'static str {
        match self {
            SAxis::Eta => "eta",
            SAxis::Beta => "beta",
            SAxis::B => "b",
            SAxis::Gamma => "gamma",
        }
    }
}

impl std::str::FromStr for SAxis {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(SAxis::Eta),
            "beta" => Ok(SAxis::Beta),
            "b" => Ok(SAxis::B),
            "gamma" => Ok(SAxis::Gamma),
            other => Err(CoreError::InvalidInput(format!(
                "unknown hyperparameter axis `{other}`"
            ))),
        }
    }
}

/// Admissible range for the learning rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaDomain {
    /// `[0, 1]`, the cut-to-Bayes interpolation range.
    Unit,
    /// `[0, ∞)`.
    NonNegative,
    /// `(lower, ∞)`.
    Above(f64),
}

/// A point `s` in hyperparameter space.
///
/// Hyperparameters are always stored in `f64`, whatever scalar the model code uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPoint {
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl Default for HyperPoint {
    fn default() -> Self {
        Self::eta(1.0)
    }
}

impl HyperPoint {
    pub fn eta(eta: f64) -> Self {
        Self {
            eta,
            beta: None,
            b: None,
            gamma: None,
        }
    }

    pub fn gamma(gamma: f64) -> Self {
        Self {
            eta: 1.0,
            beta: None,
            b: None,
            gamma: Some(gamma),
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self.b = None;
        self
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = Some(b);
        self.beta = None;
        self
    }

    /// β, derived from `b` when only that is stored.
    pub fn beta_value(&self) -> Option<f64> {
        self.beta.or(self.b.map(|b| 1.0 / b))
    }

    pub fn b_value(&self) -> Option<f64> {
        self.b.or(self.beta.map(|beta| 1.0 / beta))
    }

    pub fn get(&self, axis: SAxis) -> Option<f64> {
        match axis {
            SAxis::Eta => Some(self.eta),
            SAxis::Beta => self.beta_value(),
            SAxis::B => self.b_value(),
            SAxis::Gamma => self.gamma,
        }
    }

    pub fn set(&mut self, axis: SAxis, value: f64) {
        match axis {
            SAxis::Eta => self.eta = value,
            SAxis::Beta => *self = self.with_beta(value),
            SAxis::B => *self = self.with_b(value),
            SAxis::Gamma => self.gamma = Some(value),
        }
    }

    /// Point with the given coordinates set on top of `base`.
    pub fn from_axes(base: HyperPoint, axes: &[SAxis], values: &[f64]) -> Self {
        let mut p = base;
        for (a, v) in axes.iter().zip(values) {
            p.set(*a, *v);
        }
        p
    }

    pub fn validate(&self, domain: EtaDomain) -> Result<()> {
        let eta_ok = match domain {
            EtaDomain::Unit => (0.0..=1.0).contains(&self.eta),
            EtaDomain::NonNegative => self.eta >= 0.0 && self.eta.is_finite(),
            EtaDomain::Above(lo) => self.eta > lo && self.eta.is_finite(),
        };
        if !eta_ok {
            return Err(CoreError::ParameterDomain(format!(
                "eta = {} outside {:?}",
                self.eta, domain
            )));
        }
        if let (Some(beta), Some(b)) = (self.beta, self.b) {
            if (beta * b - 1.0).abs() > 1e-12 {
                return Err(CoreError::ParameterDomain(format!(
                    "beta = {beta} and b = {b} disagree"
                )));
            }
        }
        if let Some(beta) = self.beta_value() {
            if !(beta > 0.0) || !beta.is_finite() {
                return Err(CoreError::ParameterDomain(format!(
                    "beta = {beta} must be positive"
                )));
            }
        }
        if let Some(g) = self.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(CoreError::ParameterDomain(format!(
                    "gamma = {g} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}
