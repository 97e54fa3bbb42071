//! Negative log-likelihood and β-loss over a [`SimpleDataset`].

use gbcal_core::{Real, SimpleDataset};

use crate::error::{LossError, Result};
use crate::model::{power_integral, IntegralMethod, ObservationModel};

/// `-Σ_i log p(x_i | φ)`. Returns `+∞` (with a warning) if some point has zero density.
pub fn neg_log_lik<T: Real, M: ObservationModel<T> + ?Sized>(
    model: &M,
    phi: &[T],
    x: &SimpleDataset<T>,
) -> T {
    let mut acc = T::zero();
    for p in x.points() {
        let lp = model.log_density(p, phi);
        if lp == T::neg_infinity() {
            log::warn!("zero density at point {p:?}");
            return T::infinity();
        }
        acc -= lp;
    }
    acc
}

fn check_beta<T: Real>(beta: T, allow_one: bool) -> Result<()> {
    if !(beta > T::zero() && beta.is_finite()) {
        return Err(LossError::Spec(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    if !allow_one && beta == T::one() {
        return Err(LossError::Spec(
            "beta = 1 is the log-likelihood limit; use the negative log-likelihood".into(),
        ));
    }
    Ok(())
}

/// `-(1/(β-1)) Σ_i p(x_i | φ)^{β-1} + (n/β) ∫ p(x | φ)^β dx`.
pub fn beta_loss<T: Real, M: ObservationModel<T> + ?Sized>(
    model: &M,
    phi: &[T],
    x: &SimpleDataset<T>,
    beta: T,
    method: IntegralMethod,
) -> Result<T> {
    check_beta(beta, false)?;
    let bm1 = beta - T::one();
    let s: T = x
        .points()
        .map(|p| (bm1 * model.log_density(p, phi)).exp())
        .sum();
    let integral = power_integral(model, phi, beta, method)?;
    Ok(-s / bm1 + T::from_usize_lossy(x.n()) / beta * integral)
}

/// β-loss shifted by the `φ`-independent constant `-n/(β-1)`, so that it is continuous
/// in `β` and equals the negative log-likelihood plus `n` at `β = 1`.
pub fn beta_loss_centered<T: Real, M: ObservationModel<T> + ?Sized>(
    model: &M,
    phi: &[T],
    x: &SimpleDataset<T>,
    beta: T,
    method: IntegralMethod,
) -> Result<T> {
    check_beta(beta, true)?;
    let bm1 = beta - T::one();
    let mut s = T::zero();
    for p in x.points() {
        let lp = model.log_density(p, phi);
        s += if bm1 == T::zero() {
            lp
        } else {
            (bm1 * lp).exp_m1() / bm1
        };
    }
    let integral = if bm1 == T::zero() {
        T::one()
    } else {
        power_integral(model, phi, beta, method)?
    };
    Ok(-s + T::from_usize_lossy(x.n()) / beta * integral)
}

/// Gradient of [`beta_loss`] in `φ`: `-Σ p^{β-1} ∇log p + n ∫p^β ∇log ∫p^β / β`.
pub fn beta_loss_grad<T: Real, M: ObservationModel<T> + ?Sized>(
    model: &M,
    phi: &[T],
    x: &SimpleDataset<T>,
    beta: T,
    method: IntegralMethod,
) -> Result<Vec<T>> {
    check_beta(beta, true)?;
    let k = model.n_params();
    let missing = || LossError::Spec("model does not provide gradients".into());
    let bm1 = beta - T::one();
    let mut g = vec![T::zero(); k];
    for p in x.points() {
        let w = (bm1 * model.log_density(p, phi)).exp();
        let gl = model.grad_log_density(p, phi).ok_or_else(missing)?;
        for (gi, li) in g.iter_mut().zip(gl) {
            *gi -= w * li;
        }
    }
    let integral = power_integral(model, phi, beta, method)?;
    let gi = model
        .grad_log_power_integral(phi, beta)
        .ok_or_else(missing)?;
    let scale = T::from_usize_lossy(x.n()) * integral / beta;
    for (a, b) in g.iter_mut().zip(gi) {
        *a += scale * b;
    }
    Ok(g)
}
