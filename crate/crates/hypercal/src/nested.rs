//! Nested MCMC over `s`.
//!
//! The outer chain is a reflected Gaussian random walk on the bounded lattice box.
//! Each outer step runs short inner chains targeting the candidate posterior `π_{s'}`,
//! started from the current inner states, and accepts with
//! `ρ(s') Π_j p(y_j | φ'_j) / (ρ(s) Π_j p(y_j | φ_j))`. With exact inner draws this is
//! a pseudo-marginal scheme whose `s` marginal is the generalised posterior.

use gbcal_core::{derive_seed, stream_rng, Rng64};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HypercalError, Result};
use crate::prior::SPrior;

/// Sampler for `π_s(φ | x)` that can be advanced from a given state.
pub trait InnerKernel: Sync {
    type State: Clone + Send + Sync;
    fn init(&self, s: &[f64], rng: &mut Rng64) -> Self::State;
    /// Moves `state` by `steps` transitions targeting `π_s`.
    fn advance(&self, s: &[f64], state: &mut Self::State, steps: usize, rng: &mut Rng64);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedConfig {
    pub outer_len: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Inner transitions per outer step.
    pub inner_len: usize,
    pub init_s: Vec<f64>,
    /// Initial proposal scale per axis.
    pub init_scale: Vec<f64>,
    pub target_accept: f64,
    pub adapt_window: usize,
    pub seed: u64,
}

impl NestedConfig {
    pub fn new(init_s: Vec<f64>, init_scale: Vec<f64>, seed: u64) -> Self {
        Self {
            outer_len: 2000,
            burn_in: 500,
            thin: 1,
            inner_len: 200,
            init_s,
            init_scale,
            target_accept: 0.3,
            adapt_window: 50,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedDraws {
    /// Retained outer draws after burn-in and thinning.
    pub s: Vec<Vec<f64>>,
    pub accept_rate: f64,
    /// Proposal scales at the end of adaptation.
    pub scales: Vec<f64>,
}

impl NestedDraws {
    pub fn mean(&self) -> Vec<f64> {
        let d = self.s.first().map_or(0, Vec::len);
        (0..d)
            .map(|k| self.s.iter().map(|v| v[k]).sum::<f64>() / self.s.len() as f64)
            .collect()
    }
}

/// Folds `v` back into `[lo, hi]`.
pub fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    if w <= 0.0 {
        return lo;
    }
    let m = (v - lo).rem_euclid(2.0 * w);
    if m <= w {
        lo + m
    } else {
        lo + 2.0 * w - m
    }
}

fn validate(prior: &SPrior, bounds: &[(f64, f64)], cfg: &NestedConfig) -> Result<()> {
    let d = bounds.len();
    if d == 0 || cfg.init_s.len() != d || cfg.init_scale.len() != d || prior.axes.len() != d {
        return Err(HypercalError::Nested(
            "dimension mismatch between prior, bounds and config".into(),
        ));
    }
    if cfg.outer_len <= cfg.burn_in || cfg.thin == 0 || cfg.inner_len == 0 {
        return Err(HypercalError::Nested(
            "outer_len must exceed burn_in; thin and inner_len must be positive".into(),
        ));
    }
    for (k, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(HypercalError::Nested(format!(
                "axis {k} needs a bounded range"
            )));
        }
        if !(cfg.init_s[k] >= lo && cfg.init_s[k] <= hi) {
            return Err(HypercalError::Nested(format!(
                "initial s outside bounds on axis {k}"
            )));
        }
        if !(cfg.init_scale[k] > 0.0) {
            return Err(HypercalError::Nested(
                "proposal scales must be positive".into(),
            ));
        }
    }
    if !prior.log_density(&cfg.init_s).is_finite() {
        return Err(HypercalError::Nested(
            "prior vanishes at the initial s".into(),
        ));
    }
    Ok(())
}

struct Outer {
    s: Vec<f64>,
    scale: Vec<f64>,
    accepted_window: usize,
    accepted_total: usize,
}

impl Outer {
    fn propose(&self, bounds: &[(f64, f64)], rng: &mut Rng64) -> Vec<f64> {
        self.s
            .iter()
            .zip(&self.scale)
            .zip(bounds)
            .map(|((&v, &h), &(lo, hi))| {
                let z: f64 = rng.sample(StandardNormal);
                reflect(v + h * z, lo, hi)
            })
            .collect()
    }

    fn record(&mut self, t: usize, accepted: bool, cfg: &NestedConfig) {
        self.accepted_window += accepted as usize;
        if t >= cfg.burn_in {
            self.accepted_total += accepted as usize;
        }
        if t < cfg.burn_in && cfg.adapt_window > 0 && (t + 1) % cfg.adapt_window == 0 {
            let rate = self.accepted_window as f64 / cfg.adapt_window as f64;
            let f = (rate - cfg.target_accept).exp();
            self.scale.iter_mut().for_each(|h| *h *= f);
            self.accepted_window = 0;
        }
    }
}

/// Nested MCMC for the product-predictive posterior over `s`: one inner state per
/// calibration point, `log_lik(state, j) = log p(y_j | φ_j)`.
pub fn nested_mcmc_product<K, L>(
    kernel: &K,
    prior: &SPrior,
    bounds: &[(f64, f64)],
    log_lik: L,
    n_points: usize,
    cfg: &NestedConfig,
) -> Result<NestedDraws>
where
    K: InnerKernel,
    L: Fn(&K::State, usize) -> f64 + Sync,
{
    validate(prior, bounds, cfg)?;
    if n_points == 0 {
        return Err(HypercalError::Nested("no calibration points".into()));
    }
    let mut rng = stream_rng(cfg.seed, u64::MAX);
    let init = kernel.init(&cfg.init_s, &mut rng);
    let mut states: Vec<K::State> = (0..n_points)
        .into_par_iter()
        .map(|j| {
            let mut st = init.clone();
            kernel.advance(
                &cfg.init_s,
                &mut st,
                cfg.inner_len,
                &mut stream_rng(derive_seed(cfg.seed, u64::MAX - 1), j as u64),
            );
            st
        })
        .collect();
    let mut ll: Vec<f64> = states
        .iter()
        .enumerate()
        .map(|(j, st)| log_lik(st, j))
        .collect();
    let mut outer = Outer {
        s: cfg.init_s.clone(),
        scale: cfg.init_scale.clone(),
        accepted_window: 0,
        accepted_total: 0,
    };
    let mut log_rho = prior.log_density(&outer.s);
    let mut out = Vec::new();
    for t in 0..cfg.outer_len {
        let prop = outer.propose(bounds, &mut rng);
        let lp = prior.log_density(&prop);
        let mut accepted = false;
        if lp.is_finite() {
            let seed_t = derive_seed(cfg.seed, t as u64);
            let cand: Vec<(K::State, f64)> = states
                .par_iter()
                .enumerate()
                .map(|(j, st)| {
                    let mut st = st.clone();
                    kernel.advance(
                        &prop,
                        &mut st,
                        cfg.inner_len,
                        &mut stream_rng(seed_t, j as u64),
                    );
                    let v = log_lik(&st, j);
                    (st, v)
                })
                .collect();
            let new_ll: f64 = cand.iter().map(|c| c.1).sum();
            let old_ll: f64 = ll.iter().sum();
            let log_a = lp - log_rho + new_ll - old_ll;
            if log_a.is_finite() && rng.random::<f64>().ln() < log_a {
                accepted = true;
                outer.s = prop;
                log_rho = lp;
                let (st, v): (Vec<_>, Vec<_>) = cand.into_iter().unzip();
                states = st;
                ll = v;
            }
        }
        outer.record(t, accepted, cfg);
        if t >= cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 {
            out.push(outer.s.clone());
        }
    }
    Ok(NestedDraws {
        s: out,
        accept_rate: outer.accepted_total as f64 / (cfg.outer_len - cfg.burn_in) as f64,
        scales: outer.scale,
    })
}

/// Nested MCMC for the pooled-predictive posterior: a single inner state with
/// `log_lik_all(state) = Σ_j log p(y_j | φ)`.
pub fn nested_mcmc_pooled<K, L>(
    kernel: &K,
    prior: &SPrior,
    bounds: &[(f64, f64)],
    log_lik_all: L,
    cfg: &NestedConfig,
) -> Result<NestedDraws>
where
    K: InnerKernel,
    L: Fn(&K::State) -> f64,
{
    validate(prior, bounds, cfg)?;
    let mut rng = stream_rng(cfg.seed, u64::MAX);
    let mut state = kernel.init(&cfg.init_s, &mut rng);
    kernel.advance(&cfg.init_s, &mut state, cfg.inner_len, &mut rng);
    let mut ll = log_lik_all(&state);
    let mut outer = Outer {
        s: cfg.init_s.clone(),
        scale: cfg.init_scale.clone(),
        accepted_window: 0,
        accepted_total: 0,
    };
    let mut log_rho = prior.log_density(&outer.s);
    let mut out = Vec::new();
    for t in 0..cfg.outer_len {
        let prop = outer.propose(bounds, &mut rng);
        let lp = prior.log_density(&prop);
        let mut accepted = false;
        if lp.is_finite() {
            let mut cand = state.clone();
            kernel.advance(
                &prop,
                &mut cand,
                cfg.inner_len,
                &mut stream_rng(derive_seed(cfg.seed, t as u64), 0),
            );
            let new_ll = log_lik_all(&cand);
            let log_a = lp - log_rho + new_ll - ll;
            if log_a.is_finite() && rng.random::<f64>().ln() < log_a {
                accepted = true;
                outer.s = prop;
                log_rho = lp;
                state = cand;
                ll = new_ll;
            }
        }
        outer.record(t, accepted, cfg);
        if t >= cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 {
            out.push(outer.s.clone());
        }
    }
    Ok(NestedDraws {
        s: out,
        accept_rate: outer.accepted_total as f64 / (cfg.outer_len - cfg.burn_in) as f64,
        scales: outer.scale,
    })
}
