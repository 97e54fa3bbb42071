//! Exact Gaussian conditional of the missing states of one block.

use gbcal_core::{ArBridge, Real, Result as CoreResult};
use rand::Rng;

/// Posterior mean and Cholesky factor of `θ_M | x_M, θ_A, φ²` with emissions `N(θ, φ²)`.
pub fn ssm_conditional_moments<T: Real>(
    x_m: &[T],
    anchors: [T; 2],
    phi2: T,
    bridge: &ArBridge<T>,
) -> CoreResult<(Vec<T>, gbcal_core::TridiagCholesky<T>)> {
    let chol = bridge.prior_cholesky(T::one() / phi2)?;
    let mut h = bridge.linear_term(anchors);
    for (hi, &x) in h.iter_mut().zip(x_m) {
        *hi += x / phi2;
    }
    Ok((chol.solve(&h), chol))
}

/// One exact draw of the missing states of a block.
pub fn ssm_conditional_theta<T: Real, R: Rng + ?Sized>(
    x_m: &[T],
    anchors: [T; 2],
    phi2: T,
    bridge: &ArBridge<T>,
    rng: &mut R,
) -> CoreResult<Vec<T>> {
    let (mean, chol) = ssm_conditional_moments(x_m, anchors, phi2, bridge)?;
    let z: Vec<T> = (0..mean.len()).map(|_| T::std_normal(rng)).collect();
    let e = chol.solve_upper(&z);
    Ok(mean.iter().zip(&e).map(|(m, v)| *m + *v).collect())
}
