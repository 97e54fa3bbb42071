//! Monte Carlo and quadrature estimates of posterior predictive densities.

use gbcal_core::numerics::log_sum_exp;
use serde::{Deserialize, Serialize};

use crate::error::{HypercalError, Result};

/// Below this importance-weight ESS the pooled estimate is flagged as high variance.
pub const POOLED_ESS_WARN: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pointwise {
    pub value: f64,
    /// Every draw gave zero density.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pooled {
    pub value: f64,
    pub weight_ess: f64,
    pub high_variance: bool,
}

/// `log p(y_j | φ_t)` for calibration points `j` over weighted posterior draws `t`.
///
/// MCMC draws carry equal weights; quadrature nodes carry their normalised weights.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLikTable {
    log_w: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl LogLikTable {
    pub fn equal(rows: Vec<Vec<f64>>) -> Result<Self> {
        let t = rows.len();
        Self::weighted(vec![0.0; t], rows)
    }

    /// Weights are given on the log scale and need not be normalised.
    pub fn weighted(log_w: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows.len() != log_w.len() {
            return Err(HypercalError::Estimator(format!(
                "need matching non-empty draws and weights, got {} and {}",
                rows.len(),
                log_w.len()
            )));
        }
        let j = rows[0].len();
        if rows.iter().any(|r| r.len() != j) {
            return Err(HypercalError::Estimator(
                "ragged log-likelihood table".into(),
            ));
        }
        let z = log_sum_exp(&log_w);
        if !z.is_finite() {
            return Err(HypercalError::Estimator(
                "weights must not all vanish".into(),
            ));
        }
        Ok(Self {
            log_w: log_w.iter().map(|w| w - z).collect(),
            rows,
        })
    }

    pub fn from_draws<P>(
        draws: &[P],
        n_points: usize,
        log_lik: impl Fn(&P, usize) -> f64,
    ) -> Result<Self> {
        Self::equal(
            draws
                .iter()
                .map(|d| (0..n_points).map(|j| log_lik(d, j)).collect())
                .collect(),
        )
    }

    pub fn n_draws(&self) -> usize {
        self.rows.len()
    }

    pub fn n_points(&self) -> usize {
        self.rows[0].len()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_w
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t]
    }

    /// `log Σ_t w_t p(y_j | φ_t)`.
    pub fn pointwise(&self, j: usize) -> Pointwise {
        let v: Vec<f64> = self
            .rows
            .iter()
            .zip(&self.log_w)
            .map(|(r, w)| w + r[j])
            .collect();
        let value = log_sum_exp(&v);
        Pointwise {
            value,
            degenerate: value == f64::NEG_INFINITY,
        }
    }

    /// Product-loss log predictive `Σ_j log p(y_j | x)`.
    pub fn product(&self) -> f64 {
        (0..self.n_points()).map(|j| self.pointwise(j).value).sum()
    }

    /// Pooled log predictive `log Σ_t w_t Π_j p(y_j | φ_t)`.
    pub fn pooled(&self) -> Pooled {
        let v: Vec<f64> = self
            .rows
            .iter()
            .zip(&self.log_w)
            .map(|(r, w)| w + r.iter().sum::<f64>())
            .collect();
        let value = log_sum_exp(&v);
        let weight_ess = if value.is_finite() {
            let s2: f64 = v.iter().map(|x| (2.0 * (x - value)).exp()).sum();
            1.0 / s2
        } else {
            0.0
        };
        let high_variance = weight_ess < POOLED_ESS_WARN;
        if high_variance {
            log::warn!(
                "pooled predictive importance ESS {weight_ess:.1} is below {POOLED_ESS_WARN}"
            );
        }
        Pooled {
            value,
            weight_ess,
            high_variance,
        }
    }

    /// Delta-method standard error of [`product`](Self::product) given the chain ESS.
    pub fn product_mc_se(&self, ess: f64) -> f64 {
        let var: f64 = (0..self.n_points())
            .map(|j| {
                let m = self.pointwise(j).value;
                let rel: Vec<f64> = self.rows.iter().map(|r| (r[j] - m).exp()).collect();
                weighted_var(&self.log_w, &rel)
            })
            .sum();
        (var / ess.max(1.0)).sqrt()
    }

    /// Delta-method standard error of the pooled estimate given the chain ESS.
    pub fn pooled_mc_se(&self, ess: f64) -> f64 {
        let m = self.pooled().value;
        let rel: Vec<f64> = self
            .rows
            .iter()
            .map(|r| (r.iter().sum::<f64>() - m).exp())
            .collect();
        (weighted_var(&self.log_w, &rel) / ess.max(1.0)).sqrt()
    }

    /// Table restricted to the first `j` points.
    pub fn first_points(&self, j: usize) -> Self {
        Self {
            log_w: self.log_w.clone(),
            rows: self.rows.iter().map(|r| r[..j].to_vec()).collect(),
        }
    }
}

fn weighted_var(log_w: &[f64], v: &[f64]) -> f64 {
    let m: f64 = log_w.iter().zip(v).map(|(w, x)| w.exp() * x).sum();
    log_w
        .iter()
        .zip(v)
        .map(|(w, x)| w.exp() * (x - m).powi(2))
        .sum()
}

/// `log (1/T) Σ_t p(y_j | φ_t)` over equally weighted draws.
pub fn log_pointwise_predictive<P>(draws: &[P], log_lik: impl Fn(&P) -> f64) -> Pointwise {
    let v: Vec<f64> = draws.iter().map(log_lik).collect();
    let value = log_sum_exp(&v) - (draws.len() as f64).ln();
    if value == f64::NEG_INFINITY {
        log::warn!("every draw gives zero predictive density");
    }
    Pointwise {
        value,
        degenerate: value == f64::NEG_INFINITY,
    }
}

/// `log (1/T) Σ_t Π_j p(y_j | φ_t)`, where `log_lik_all` returns the joint log-likelihood.
pub fn log_pooled_predictive<P>(draws: &[P], log_lik_all: impl Fn(&P) -> f64) -> Pooled {
    let rows: Vec<Vec<f64>> = draws.iter().map(|d| vec![log_lik_all(d)]).collect();
    match LogLikTable::equal(rows) {
        Ok(t) => t.pooled(),
        Err(_) => Pooled {
            value: f64::NEG_INFINITY,
            weight_ess: 0.0,
            high_variance: true,
        },
    }
}
