//! Semi-modular losses for a two-module model: a trusted module `p(x1 | φ)` and a
//! suspect module `p(x2 | φ, θ)` with prior `π(θ)`.

use gbcal_core::{ModularDataset, Real};
use gbcal_oracle::{
    aghq_auto, laplace_at_likelihood_mode, newton_minimize, numerical_hessian, MixtureStats,
};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{LossError, Result};
use crate::loss::{beta_loss, beta_loss_centered, neg_log_lik};
use crate::model::{IntegralMethod, ObservationModel};

fn joint<T: Real>(phi: &[T], theta: &[T]) -> Vec<T> {
    phi.iter().chain(theta).copied().collect()
}

fn check_eta(eta: f64) -> Result<()> {
    if eta >= 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(LossError::Spec(format!(
            "eta must be non-negative, got {eta}"
        )))
    }
}

/// `-log p(x1 | φ) - η log p(x2 | φ, θ')`.
pub fn smi_loss_eta<T: Real>(
    m1: &dyn ObservationModel<T>,
    m2: &dyn ObservationModel<T>,
    phi: &[T],
    theta_aux: &[T],
    x: &ModularDataset<T>,
    eta: T,
) -> Result<T> {
    check_eta(eta.f64())?;
    let l1 = neg_log_lik(m1, phi, &x.x1);
    if eta == T::zero() {
        return Ok(l1);
    }
    Ok(l1 + eta * neg_log_lik(m2, &joint(phi, theta_aux), &x.x2))
}

/// `-log p(x1 | φ) + η ℓ_β(φ, θ'; x2)`. With `centered` the β-loss is shifted to stay
/// finite through `β = 1`.
#[allow(clippy::too_many_arguments)]
pub fn smi_loss_eta_beta<T: Real>(
    m1: &dyn ObservationModel<T>,
    m2: &dyn ObservationModel<T>,
    phi: &[T],
    theta_aux: &[T],
    x: &ModularDataset<T>,
    eta: T,
    beta: T,
    centered: bool,
) -> Result<T> {
    check_eta(eta.f64())?;
    let l1 = neg_log_lik(m1, phi, &x.x1);
    if eta == T::zero() {
        return Ok(l1);
    }
    let p2 = joint(phi, theta_aux);
    let lb = if centered {
        beta_loss_centered(m2, &p2, &x.x2, beta, IntegralMethod::ClosedForm)?
    } else {
        beta_loss(m2, &p2, &x.x2, beta, IntegralMethod::ClosedForm)?
    };
    Ok(l1 + eta * lb)
}

/// How `log ∫ p(x2 | φ, θ) π(θ) dθ` is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Marginalizer {
    #[default]
    ClosedForm,
    /// Laplace at the likelihood mode with the prior evaluated there.
    Laplace,
    /// Adaptive Gauss-Hermite with the given nodes per axis.
    Aghq(usize),
}

/// Suspect module exposed in `f64` for marginalisation.
pub trait SuspectModule: Send + Sync {
    fn n_obs(&self) -> usize;
    fn theta_dim(&self) -> usize;
    fn log_lik(&self, phi: &[f64], theta: &[f64]) -> f64;
    fn log_prior_theta(&self, theta: &[f64]) -> f64;
    fn closed_form_log_marginal(&self, _phi: &[f64]) -> Option<f64> {
        None
    }
    fn theta_start(&self, _phi: &[f64]) -> Vec<f64> {
        vec![0.0; self.theta_dim()]
    }
}

/// Suspect module of the two-module normal model, via its sufficient statistics.
#[derive(Clone, Copy, Debug)]
pub struct MixtureSuspect(pub MixtureStats);

impl SuspectModule for MixtureSuspect {
    fn n_obs(&self) -> usize {
        self.0.n2
    }
    fn theta_dim(&self) -> usize {
        1
    }
    fn log_lik(&self, phi: &[f64], theta: &[f64]) -> f64 {
        self.0.log_lik_x2(phi[0], theta[0])
    }
    fn log_prior_theta(&self, theta: &[f64]) -> f64 {
        self.0.log_prior_theta(theta[0])
    }
    fn closed_form_log_marginal(&self, phi: &[f64]) -> Option<f64> {
        Some(self.0.log_marginal_x2(phi[0]))
    }
    fn theta_start(&self, phi: &[f64]) -> Vec<f64> {
        vec![self.0.xbar2() - phi[0]]
    }
}

pub fn log_marginal(module: &dyn SuspectModule, phi: &[f64], how: Marginalizer) -> Result<f64> {
    let wrap = |source| LossError::Marginal {
        phi: phi.to_vec(),
        source,
    };
    let start = DVector::from_vec(module.theta_start(phi));
    let v = match how {
        Marginalizer::ClosedForm => module
            .closed_form_log_marginal(phi)
            .ok_or_else(|| LossError::Spec("module has no closed-form marginal".into()))?,
        Marginalizer::Aghq(k) => aghq_auto(
            |t: &DVector<f64>| {
                module.log_lik(phi, t.as_slice()) + module.log_prior_theta(t.as_slice())
            },
            &start,
            k,
        )
        .map_err(wrap)?,
        Marginalizer::Laplace => {
            let n = module.n_obs().max(1);
            let r = |t: &DVector<f64>| -module.log_lik(phi, t.as_slice()) / n as f64;
            let mode = newton_minimize(r, &start).map_err(wrap)?;
            let h = numerical_hessian(r, &mode);
            laplace_at_likelihood_mode(n, r(&mode), &h, module.log_prior_theta(mode.as_slice()))
                .map_err(wrap)?
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(LossError::Domain(format!(
            "non-finite marginal at phi = {phi:?}"
        )))
    }
}

/// `-log p(x1 | φ) - γ log ∫ p(x2 | φ, θ) π(θ) dθ`.
pub fn smi_loss_gamma<T: Real>(
    m1: &dyn ObservationModel<T>,
    suspect: &dyn SuspectModule,
    phi: &[T],
    x1: &gbcal_core::SimpleDataset<T>,
    gamma: f64,
    how: Marginalizer,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(LossError::Spec(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    let l1 = neg_log_lik(m1, phi, x1).f64();
    if gamma == 0.0 {
        return Ok(l1);
    }
    let p: Vec<f64> = phi.iter().map(|v| v.f64()).collect();
    Ok(l1 - gamma * log_marginal(suspect, &p, how)?)
}
