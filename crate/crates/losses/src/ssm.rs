//! Losses for the block state-space model: emissions `x ~ N(θ, φ²)`, anchors with
//! known states, AR(1) prior on the missing states of each block.

use gbcal_core::{normal_logpdf, ArBridge, Real, SsmDataset, SsmTruth};

use crate::error::{LossError, Result};
use crate::model::normal_power_integral;

#[derive(Debug, Clone)]
pub struct SsmModel<T: Real> {
    pub bridge: ArBridge<T>,
    /// Inverse-gamma prior on `φ²`: shape and scale.
    pub prior_a: T,
    pub prior_b: T,
}

impl<T: Real> SsmModel<T> {
    pub fn new(truth: &SsmTruth, d_x: usize) -> Result<Self> {
        Ok(Self {
            bridge: ArBridge::new(T::c(truth.nu), T::c(truth.sigma_ar), d_x)?,
            prior_a: T::c(truth.invgamma_a),
            prior_b: T::c(truth.invgamma_b),
        })
    }

    pub fn log_prior_phi2(&self, phi2: T) -> T {
        if phi2 <= T::zero() {
            return T::neg_infinity();
        }
        let (a, b) = (self.prior_a, self.prior_b);
        a * b.ln()
            - T::c(gbcal_oracle::special::ln_gamma(a.f64()))
            - (a + T::one()) * phi2.ln()
            - b / phi2
    }

    /// `log p(x_A | θ_A, φ²)`.
    pub fn log_lik_anchor(&self, phi2: T, data: &SsmDataset<T>) -> T {
        let mut acc = T::zero();
        for i in 0..data.n_blocks() {
            let x = data.block_anchor_x(i);
            let t = data.block_anchor_theta(i);
            acc += normal_logpdf(x[0], t[0], phi2) + normal_logpdf(x[1], t[1], phi2);
        }
        acc
    }

    /// `log p(x_M | θ_M, φ²)` with `theta_m` laid out block-major.
    pub fn log_lik_missing(&self, phi2: T, theta_m: &[T], data: &SsmDataset<T>) -> T {
        let k = data.n_missing_per_block();
        let mut acc = T::zero();
        for i in 0..data.n_blocks() {
            let x = data.block_missing_x(i);
            for j in 0..k {
                acc += normal_logpdf(x[j], theta_m[i * k + j], phi2);
            }
        }
        acc
    }

    pub fn log_prior_theta(&self, theta_m: &[T], data: &SsmDataset<T>) -> T {
        let k = data.n_missing_per_block();
        (0..data.n_blocks())
            .map(|i| {
                self.bridge
                    .prior_logpdf(&theta_m[i * k..(i + 1) * k], data.block_anchor_theta(i))
            })
            .sum()
    }

    /// η-SMI loss `-log p(x_A | θ_A, φ²) - η log p(x_M | θ'_M, φ²)`.
    pub fn eta_loss(&self, phi2: T, theta_m: &[T], data: &SsmDataset<T>, eta: T) -> T {
        let l = -self.log_lik_anchor(phi2, data);
        if eta == T::zero() {
            l
        } else {
            l - eta * self.log_lik_missing(phi2, theta_m, data)
        }
    }

    /// Centered β-loss of one emission `x ~ N(θ, φ²)`.
    pub fn beta_term(x: T, theta: T, phi2: T, beta: T) -> T {
        let lp = normal_logpdf(x, theta, phi2);
        let bm1 = beta - T::one();
        if bm1 == T::zero() {
            return -lp + T::one();
        }
        -(bm1 * lp).exp_m1() / bm1 + normal_power_integral(phi2, beta) / beta
    }

    /// (η,β)-SMI loss `-log p(x_A | θ_A, φ²) + η Σ_M ℓ_β(x_m; θ'_m, φ²)` using the centered β-loss.
    pub fn eta_beta_loss(
        &self,
        phi2: T,
        theta_m: &[T],
        data: &SsmDataset<T>,
        eta: T,
        beta: T,
    ) -> Result<T> {
        if !(beta > T::zero()) {
            return Err(LossError::Spec(format!(
                "beta must be positive, got {beta}"
            )));
        }
        let l = -self.log_lik_anchor(phi2, data);
        if eta == T::zero() {
            return Ok(l);
        }
        let k = data.n_missing_per_block();
        let mut s = T::zero();
        for i in 0..data.n_blocks() {
            let x = data.block_missing_x(i);
            for j in 0..k {
                s += Self::beta_term(x[j], theta_m[i * k + j], phi2, beta);
            }
        }
        Ok(l + eta * s)
    }

    /// `log p(x_A | θ_A, φ²) + Σ_blocks log ∫ p(x_M | θ', φ²)^η π(θ' | θ_A) dθ'`:
    /// the η-SMI log posterior kernel for `φ²` before the prior.
    pub fn log_eta_marginal(&self, phi2: T, data: &SsmDataset<T>, eta: T) -> T {
        let mut acc = self.log_lik_anchor(phi2, data);
        for i in 0..data.n_blocks() {
            acc += self.bridge.log_tempered_marginal(
                data.block_missing_x(i),
                data.block_anchor_theta(i),
                phi2,
                eta,
            );
        }
        acc
    }
}
