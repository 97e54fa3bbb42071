//! Simulators for the synthetic examples. Each is a pure function of its inputs and seed.

use crate::data::{ModularDataset, SimpleDataset, SsmDataset};
use crate::error::{CoreError, Result};
use crate::real::Real;
use crate::rng::stream_rng;
use crate::truth::{MixtureTruth, SsmTruth};

/// `x1 ~ N(φ*, σ1²)`, `x2 ~ λ* N(φ*, σ2²) + (1 - λ*) N(θ*, σ2²)`.
pub fn simulate_mixture<T: Real>(
    truth: &MixtureTruth,
    n1: usize,
    n2: usize,
    seed: u64,
) -> Result<ModularDataset<T>> {
    truth.validate()?;
    let mut r1 = stream_rng(seed, 1);
    let s1 = T::c(truth.sigma1_sq.sqrt());
    let x1: Vec<T> = (0..n1)
        .map(|_| T::c(truth.phi_star) + s1 * T::std_normal(&mut r1))
        .collect();
    let mut r2 = stream_rng(seed, 2);
    let s2 = T::c(truth.sigma2_sq.sqrt());
    let lambda = T::c(truth.lambda_star);
    let x2: Vec<T> = (0..n2)
        .map(|_| {
            let u = T::open01(&mut r2);
            let z = T::std_normal(&mut r2);
            let centre = if u < lambda {
                truth.phi_star
            } else {
                truth.theta_star
            };
            T::c(centre) + s2 * z
        })
        .collect();
    Ok(ModularDataset::new(
        SimpleDataset::scalar(x1),
        SimpleDataset::scalar(x2),
    ))
}

/// Stationary AR(1) path across all blocks, emitted with anchor or missing-state noise.
pub fn simulate_ssm<T: Real>(
    truth: &SsmTruth,
    n_blocks: usize,
    d_x: usize,
    seed: u64,
) -> Result<SsmDataset<T>> {
    truth.validate()?;
    if n_blocks == 0 {
        return Err(CoreError::InvalidInput("need at least one block".into()));
    }
    if d_x < 2 {
        return Err(CoreError::InvalidInput(format!(
            "block length d_x = {d_x} must be at least 2"
        )));
    }
    let len = n_blocks * d_x;
    let nu = T::c(truth.nu);
    let sig = T::c(truth.sigma_ar);
    let mut rl = stream_rng(seed, 1);
    let mut theta = Vec::with_capacity(len);
    let mut cur = T::c(truth.stationary_var().sqrt()) * T::std_normal(&mut rl);
    theta.push(cur);
    for _ in 1..len {
        cur = nu * cur + sig * T::std_normal(&mut rl);
        theta.push(cur);
    }
    let mut re = stream_rng(seed, 2);
    let fa = T::c(truth.phi_a_star);
    let fm = T::c(truth.phi_m_star);
    let mut x = Vec::with_capacity(len);
    let mut anchors = Vec::with_capacity(2 * n_blocks);
    for (k, &t) in theta.iter().enumerate() {
        let j = k % d_x;
        let is_anchor = j == 0 || j == d_x - 1;
        let sd = if is_anchor { fa } else { fm };
        x.push(t + sd * T::std_normal(&mut re));
        if is_anchor {
            anchors.push(t);
        }
    }
    SsmDataset::new(n_blocks, d_x, x, anchors, Some(theta))
}

/// `n` iid draws from `N(μ*, 1)`.
pub fn simulate_conjugate_normal<T: Real>(mu_star: f64, n: usize, seed: u64) -> SimpleDataset<T> {
    let mut r = stream_rng(seed, 1);
    SimpleDataset::scalar(
        (0..n)
            .map(|_| T::c(mu_star) + T::std_normal(&mut r))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_sizes_and_reproducibility() {
        let t = MixtureTruth::default();
        let a = simulate_mixture::<f64>(&t, 30, 60, 11).unwrap();
        let b = simulate_mixture::<f64>(&t, 30, 60, 11).unwrap();
        assert_eq!(a.x1.n(), 30);
        assert_eq!(a.x2.n(), 60);
        assert_eq!(a, b);
        assert_ne!(a, simulate_mixture::<f64>(&t, 30, 60, 12).unwrap());
    }

    #[test]
    fn mixture_without_outliers() {
        let t = MixtureTruth {
            lambda_star: 1.0,
            ..Default::default()
        };
        let d = simulate_mixture::<f64>(&t, 0, 20_000, 3).unwrap();
        assert!(d.x2.values().iter().all(|v| v.abs() < 6.0));
    }

    #[test]
    fn invalid_truth_is_rejected() {
        let t = MixtureTruth {
            sigma1_sq: -1.0,
            ..Default::default()
        };
        assert!(simulate_mixture::<f64>(&t, 1, 1, 0).is_err());
        let s = SsmTruth {
            nu: 1.0,
            ..Default::default()
        };
        assert!(simulate_ssm::<f64>(&s, 2, 6, 0).is_err());
        assert!(simulate_ssm::<f64>(&SsmTruth::default(), 2, 1, 0).is_err());
    }

    #[test]
    fn ssm_shape() {
        let d = simulate_ssm::<f64>(&SsmTruth::default(), 10, 6, 5).unwrap();
        assert_eq!(d.x_all().len(), 60);
        assert_eq!(d.theta_anchor().len(), 20);
        let th = d.theta_all().unwrap();
        assert_eq!(d.block_anchor_theta(3), [th[18], th[23]]);
    }

    #[test]
    fn single_precision_simulation() {
        let d = simulate_conjugate_normal::<f32>(0.0, 100, 1);
        assert_eq!(d.n(), 100);
    }
}
