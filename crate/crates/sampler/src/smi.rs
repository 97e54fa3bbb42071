//! Two-stage SMI sampling: `(φ, θ')` from the joint Gibbs posterior, then
//! `θ ~ π(θ | x2, φ)` for every retained `φ`.

use gbcal_core::{derive_seed, rng_from_seed, Real, Rng64};
use serde::{Deserialize, Serialize};

use crate::chain::{Chain, ChainConfig};
use crate::error::Result;
use crate::rwm::adaptive_rwm;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmiDraws<T: Real> {
    /// Chain over `(φ, θ')`, with `φ` in the leading `phi_dim` coordinates.
    pub joint: Chain<T>,
    pub phi_dim: usize,
    /// One `θ` per retained joint draw whose conditional draw succeeded.
    pub theta: Vec<Vec<T>>,
    /// Indices into `joint.draws` matching `theta`.
    pub kept: Vec<usize>,
    pub dropped: usize,
}

impl<T: Real> SmiDraws<T> {
    pub fn phi(&self, i: usize) -> &[T] {
        &self.joint.draws[i][..self.phi_dim]
    }
}

/// `cond_theta` returns `None` when its (possibly inner-MCMC) draw fails; such draws are dropped.
pub fn smi_two_stage_sample<T: Real>(
    joint_log_target: impl Fn(&[T]) -> T,
    phi_dim: usize,
    cond_theta: impl Fn(&[T], &mut Rng64) -> Option<Vec<T>>,
    config: &ChainConfig,
) -> Result<SmiDraws<T>> {
    let joint = adaptive_rwm(joint_log_target, config)?;
    let mut rng = rng_from_seed(derive_seed(config.seed, 0x7e7a));
    let mut theta = Vec::with_capacity(joint.len());
    let mut kept = Vec::with_capacity(joint.len());
    let mut dropped = 0;
    for (i, d) in joint.draws.iter().enumerate() {
        match cond_theta(&d[..phi_dim], &mut rng) {
            Some(t) => {
                theta.push(t);
                kept.push(i);
            }
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("{dropped} conditional theta draws failed and were dropped");
    }
    Ok(SmiDraws {
        joint,
        phi_dim,
        theta,
        kept,
        dropped,
    })
}
