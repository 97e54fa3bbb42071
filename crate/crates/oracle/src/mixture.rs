//! Closed forms for the two-module normal model
//! `x1_i ~ N(φ, σ1²)`, `x2_i ~ N(φ + θ, σ2²)`, `θ ~ N(0, s_θ²)`, flat prior on `φ`.
//!
//! Both η-SMI and γ-SMI keep the `φ` marginal Gaussian, and the conditional
//! `θ | x2, φ` is Gaussian too, so their predictives are available exactly.

use std::f64::consts::PI;

use gbcal_core::numerics::{golden_section_max, CompositeRule};
use gbcal_core::{MixtureTruth, ModularDataset, Real};
use serde::{Deserialize, Serialize};

use crate::error::{OracleError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub var: f64,
}

impl Gaussian {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        -0.5 * (2.0 * PI * self.var).ln() - 0.5 * (x - self.mean).powi(2) / self.var
    }

    pub fn sd(&self) -> f64 {
        self.var.sqrt()
    }
}

/// Which modular posterior the hyperparameter `s` indexes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmiKind {
    /// Power on the suspect likelihood inside the `θ'` marginalisation.
    Eta,
    /// Power on the marginal likelihood of the suspect module.
    Gamma,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureStats {
    pub n1: usize,
    pub n2: usize,
    pub sum_x1: f64,
    pub sum_x2: f64,
    pub sumsq_x1: f64,
    pub sumsq_x2: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub s_theta_sq: f64,
}

impl MixtureStats {
    pub fn from_data<T: Real>(data: &ModularDataset<T>, truth: &MixtureTruth) -> Self {
        let x1: Vec<f64> = data.x1.values().iter().map(|v| v.f64()).collect();
        let x2: Vec<f64> = data.x2.values().iter().map(|v| v.f64()).collect();
        Self::from_slices(&x1, &x2, truth)
    }

    pub fn from_slices(x1: &[f64], x2: &[f64], truth: &MixtureTruth) -> Self {
        Self {
            n1: x1.len(),
            n2: x2.len(),
            sum_x1: x1.iter().sum(),
            sum_x2: x2.iter().sum(),
            sumsq_x1: x1.iter().map(|v| v * v).sum(),
            sumsq_x2: x2.iter().map(|v| v * v).sum(),
            sigma1_sq: truth.sigma1_sq,
            sigma2_sq: truth.sigma2_sq,
            s_theta_sq: truth.s_theta_sq,
        }
    }

    /// Marginal posterior of `φ` under the chosen SMI variant at `s ≥ 0`.
    pub fn posterior_phi(&self, kind: SmiKind, s: f64) -> Result<Gaussian> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(OracleError::Improper(format!(
                "hyperparameter must be non-negative, got {s}"
            )));
        }
        let n2 = self.n2 as f64;
        let d = match kind {
            SmiKind::Eta => self.sigma2_sq + n2 * s * self.s_theta_sq,
            SmiKind::Gamma => self.sigma2_sq + n2 * self.s_theta_sq,
        };
        let prec = s * n2 / d + self.n1 as f64 / self.sigma1_sq;
        if prec <= 0.0 {
            return Err(OracleError::Improper(format!(
                "flat φ prior with no informative data at s = {s}"
            )));
        }
        let mean = (s * self.sum_x2 / d + self.sum_x1 / self.sigma1_sq) / prec;
        Ok(Gaussian {
            mean,
            var: 1.0 / prec,
        })
    }

    /// `θ | x2, φ ~ N(ρ (x̄2 - φ), σ²_{θ|φ})`; returns `(ρ, σ²_{θ|φ})`.
    pub fn theta_conditional(&self) -> (f64, f64) {
        let n2 = self.n2 as f64;
        let v = 1.0 / (1.0 / self.s_theta_sq + n2 / self.sigma2_sq);
        (n2 * v / self.sigma2_sq, v)
    }

    pub fn xbar2(&self) -> f64 {
        if self.n2 == 0 {
            0.0
        } else {
            self.sum_x2 / self.n2 as f64
        }
    }

    /// Pooled predictive of `J` points from the well-specified module:
    /// `N_J(y; μ 1, σ1² I + σ² 1 1ᵀ)`.
    pub fn pooled_log_predictive(&self, kind: SmiKind, s: f64, y: &[f64]) -> Result<f64> {
        let g = self.posterior_phi(kind, s)?;
        let j = y.len() as f64;
        let v1 = self.sigma1_sq;
        let s1: f64 = y.iter().map(|v| v - g.mean).sum();
        let s2: f64 = y.iter().map(|v| (v - g.mean).powi(2)).sum();
        let log_det = j * v1.ln() + (j * g.var / v1).ln_1p();
        let quad = (s2 - g.var * s1 * s1 / (v1 + j * g.var)) / v1;
        Ok(-0.5 * j * (2.0 * PI).ln() - 0.5 * log_det - 0.5 * quad)
    }

    /// Product predictive `Σ_j log N(y_j; μ, σ² + σ1²)`.
    pub fn product_log_predictive(&self, kind: SmiKind, s: f64, y: &[f64]) -> Result<f64> {
        let g = self.posterior_phi(kind, s)?;
        let p = Gaussian {
            mean: g.mean,
            var: g.var + self.sigma1_sq,
        };
        Ok(y.iter().map(|&v| p.ln_pdf(v)).sum())
    }

    /// `J → ∞` limit of the per-point pooled loss, up to constants: `-log π_s(φ̃ | x)`.
    pub fn pooled_limit_loss(&self, kind: SmiKind, s: f64, phi_tilde: f64) -> Result<f64> {
        Ok(-self.posterior_phi(kind, s)?.ln_pdf(phi_tilde))
    }

    /// `J → ∞` limit of the per-point product loss: expected negative log predictive
    /// of a new `N(φ*, σ1²)` point.
    pub fn product_limit_loss(&self, kind: SmiKind, s: f64, phi_star: f64) -> Result<f64> {
        let g = self.posterior_phi(kind, s)?;
        let v = g.var + self.sigma1_sq;
        Ok(0.5 * (2.0 * PI * v).ln() + 0.5 * (self.sigma1_sq + (g.mean - phi_star).powi(2)) / v)
    }

    /// Log marginal likelihood of the suspect module, `log ∫ p(x2 | φ, θ) π(θ) dθ`.
    pub fn log_marginal_x2(&self, phi: f64) -> f64 {
        let n2 = self.n2 as f64;
        let v2 = self.sigma2_sq;
        let st = self.s_theta_sq;
        let ss = self.sumsq_x2 - 2.0 * phi * self.sum_x2 + n2 * phi * phi;
        let sd = self.sum_x2 - n2 * phi;
        -0.5 * n2 * (2.0 * PI * v2).ln()
            - 0.5 * (n2 * st / v2).ln_1p()
            - 0.5 * (ss - st * sd * sd / (v2 + n2 * st)) / v2
    }

    /// `log ∫ p(x2 | φ, θ)^η π(θ) dθ`.
    pub fn log_tempered_marginal_x2(&self, phi: f64, eta: f64) -> f64 {
        let n2 = self.n2 as f64;
        let v2 = self.sigma2_sq;
        let st = self.s_theta_sq;
        let ss = self.sumsq_x2 - 2.0 * phi * self.sum_x2 + n2 * phi * phi;
        let sd = self.sum_x2 - n2 * phi;
        -0.5 * eta * n2 * (2.0 * PI * v2).ln()
            - 0.5 * (eta * n2 * st / v2).ln_1p()
            - 0.5 * eta * (ss - eta * st * sd * sd / (v2 + eta * n2 * st)) / v2
    }

    /// `log p(x1 | φ)`.
    pub fn log_lik_x1(&self, phi: f64) -> f64 {
        let n1 = self.n1 as f64;
        let ss = self.sumsq_x1 - 2.0 * phi * self.sum_x1 + n1 * phi * phi;
        -0.5 * n1 * (2.0 * PI * self.sigma1_sq).ln() - 0.5 * ss / self.sigma1_sq
    }

    /// `log p(x2 | φ, θ)`.
    pub fn log_lik_x2(&self, phi: f64, theta: f64) -> f64 {
        let n2 = self.n2 as f64;
        let m = phi + theta;
        let ss = self.sumsq_x2 - 2.0 * m * self.sum_x2 + n2 * m * m;
        -0.5 * n2 * (2.0 * PI * self.sigma2_sq).ln() - 0.5 * ss / self.sigma2_sq
    }

    pub fn log_prior_theta(&self, theta: f64) -> f64 {
        Gaussian {
            mean: 0.0,
            var: self.s_theta_sq,
        }
        .ln_pdf(theta)
    }
}

/// Minimiser over `s ∈ [0, 1]` of a loss curve, ties toward the smaller `s`.
pub fn argmin_unit(loss: impl Fn(f64) -> f64) -> f64 {
    golden_section_max(|s| -loss(s), 0.0, 1.0, 1e-10).0
}

/// Total-variation distance between two Gaussians by quadrature.
pub fn tv_distance(p: Gaussian, q: Gaussian) -> f64 {
    let lo = (p.mean - 12.0 * p.sd()).min(q.mean - 12.0 * q.sd());
    let hi = (p.mean + 12.0 * p.sd()).max(q.mean + 12.0 * q.sd());
    let rule = CompositeRule::new(lo, hi, 400, 10);
    0.5 * rule.integrate(|x| (p.ln_pdf(x).exp() - q.ln_pdf(x).exp()).abs())
}
