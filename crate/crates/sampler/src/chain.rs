use std::path::Path;

use gbcal_core::Real;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SamplerError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub target_accept: f64,
    pub init: Vec<f64>,
    pub adapt_window: usize,
    pub seed: u64,
}

impl ChainConfig {
    /// 10 000 iterations, 2 000 burn-in, thinning 10: 800 retained draws.
    pub fn standard(init: Vec<f64>, seed: u64) -> Self {
        let target = if init.len() == 1 { 0.44 } else { 0.234 };
        Self {
            n_iter: 10_000,
            burn_in: 2_000,
            thin: 10,
            target_accept: target,
            init,
            adapt_window: 100,
            seed,
        }
    }

    /// The mixture appendix budget: 8000 retained draws after 2000 burn-in and thinning by 10.
    pub fn long(init: Vec<f64>, seed: u64) -> Self {
        Self {
            n_iter: 82_000,
            ..Self::standard(init, seed)
        }
    }

    pub fn with_budget(mut self, n_iter: usize, burn_in: usize, thin: usize) -> Self {
        self.n_iter = n_iter;
        self.burn_in = burn_in;
        self.thin = thin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_iter {
            return Err(SamplerError::Config(format!(
                "burn_in {} must be below n_iter {}",
                self.burn_in, self.n_iter
            )));
        }
        if self.thin == 0 {
            return Err(SamplerError::Config("thin must be at least 1".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(SamplerError::Config(
                "target_accept must lie in (0, 1)".into(),
            ));
        }
        if self.init.is_empty() {
            return Err(SamplerError::Config(
                "init must have at least one coordinate".into(),
            ));
        }
        if self.adapt_window == 0 {
            return Err(SamplerError::Config("adapt_window must be positive".into()));
        }
        Ok(())
    }

    pub fn n_draws(&self) -> usize {
        (self.n_iter - self.burn_in) / self.thin
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain<T: Real> {
    pub draws: Vec<Vec<T>>,
    pub accept_rate: f64,
    pub log_density_trace: Vec<T>,
    pub seed: u64,
    pub ess: Vec<f64>,
    /// Proposal scales frozen at the end of burn-in.
    pub scales: Vec<f64>,
}

impl<T: Real> Chain<T> {
    pub fn new(
        draws: Vec<Vec<T>>,
        accept_rate: f64,
        log_density_trace: Vec<T>,
        seed: u64,
        scales: Vec<f64>,
    ) -> Self {
        let dim = draws.first().map_or(0, |d| d.len());
        let ess = (0..dim)
            .map(|k| {
                let col: Vec<f64> = draws.iter().map(|d| d[k].f64()).collect();
                ess_ips(&col)
            })
            .collect();
        Self {
            draws,
            accept_rate,
            log_density_trace,
            seed,
            ess,
            scales,
        }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.draws.first().map_or(0, |d| d.len())
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[k].f64()).collect()
    }

    /// Writes `iter,coord_0,...,coord_k,log_density`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["iter".to_string()];
        header.extend((0..self.dim()).map(|k| format!("coord_{k}")));
        header.push("log_density".into());
        w.write_record(&header)?;
        for (i, (d, l)) in self.draws.iter().zip(&self.log_density_trace).enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(d.iter().map(|v| format!("{:e}", v.f64())));
            row.push(format!("{:e}", l.f64()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Effective sample size by Geyer's initial positive sequence, clamped to `[1, n]`.
pub fn ess_ips(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let m = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let acov = |k: usize| {
        c[..n - k]
            .iter()
            .zip(&c[k..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let g0 = acov(0);
    if g0 <= 0.0 {
        return n as f64;
    }
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = acov(2 * k) + acov(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 1;
    }
    let tau = (2.0 * sum - g0) / g0;
    (n as f64 / tau.max(1e-12)).clamp(1.0, n as f64)
}
