//! η-SMI and (η,β)-SMI for the block state-space model.
//!
//! Prediction targets are anchor pairs `(y1, y2, θ1, θ2)`, with
//! `p(z | φ²) = N(y1; θ1, φ²) N(y2; θ2, φ²)`. Under η-SMI the `φ²` posterior is
//! one-dimensional and is integrated by quadrature in `u = log φ²`; under
//! (η,β)-SMI it is sampled by Metropolis-within-Gibbs over `(u, θ'_M)`.

use std::f64::consts::PI;

use gbcal_core::numerics::{golden_section_max, log_sum_exp, CompositeRule};
use gbcal_core::{stream_rng, Rng64, SsmDataset, SsmTruth};
use gbcal_hypercal::{waic, InnerKernel, LatticeValue, LogLikTable, PosteriorKind, WaicValue};
use gbcal_losses::{normal_power_integral, SsmModel};
use gbcal_sampler::ess_ips;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

/// One anchor observation pair with its known latent values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorPair {
    pub y: [f64; 2],
    pub theta: [f64; 2],
}

impl AnchorPair {
    pub fn sq_resid(&self) -> f64 {
        (self.y[0] - self.theta[0]).powi(2) + (self.y[1] - self.theta[1]).powi(2)
    }

    pub fn log_lik(&self, phi2: f64) -> f64 {
        AnchorStats::from_pairs(std::slice::from_ref(self)).log_lik(phi2)
    }
}

pub fn anchor_pairs(data: &SsmDataset<f64>) -> Vec<AnchorPair> {
    (0..data.n_blocks())
        .map(|i| AnchorPair {
            y: data.block_anchor_x(i),
            theta: data.block_anchor_theta(i),
        })
        .collect()
}

/// Sufficient statistics of a set of anchor pairs: number of scalar residuals and their sum of squares.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnchorStats {
    pub m: f64,
    pub ss: f64,
}

impl AnchorStats {
    pub fn from_pairs(pairs: &[AnchorPair]) -> Self {
        Self {
            m: 2.0 * pairs.len() as f64,
            ss: pairs.iter().map(AnchorPair::sq_resid).sum(),
        }
    }

    pub fn plus(self, other: Self) -> Self {
        Self {
            m: self.m + other.m,
            ss: self.ss + other.ss,
        }
    }

    pub fn log_lik(&self, phi2: f64) -> f64 {
        if self.m == 0.0 {
            return 0.0;
        }
        -0.5 * self.m * (2.0 * PI * phi2).ln() - 0.5 * self.ss / phi2
    }
}

/// Quadrature representation of a density over `u = log φ²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phi2Posterior {
    pub log_phi2: Vec<f64>,
    /// Normalised log weights at the nodes.
    pub log_w: Vec<f64>,
    /// `log ∫ exp(kernel(u)) du`.
    pub log_norm: f64,
    pub mode: f64,
    pub sd: f64,
}

const SCAN_LO: f64 = -16.0;
const SCAN_HI: f64 = 8.0;
const SCAN_STEP: f64 = 0.05;
const TAIL_DROP: f64 = 60.0;

impl Phi2Posterior {
    /// Builds the rule from a unimodal log kernel in `u`.
    pub fn from_log_kernel(kernel: impl Fn(f64) -> f64) -> Result<Self> {
        let n = ((SCAN_HI - SCAN_LO) / SCAN_STEP).round() as usize;
        let (mut best_u, mut best_f) = (f64::NAN, f64::NEG_INFINITY);
        for i in 0..=n {
            let u = SCAN_LO + i as f64 * SCAN_STEP;
            let f = kernel(u);
            if f > best_f {
                best_u = u;
                best_f = f;
            }
        }
        if !best_f.is_finite() {
            return Err(EvalError::Numeric(
                "φ² kernel is not finite anywhere on the scan".into(),
            ));
        }
        let (mode, fmax) =
            golden_section_max(&kernel, best_u - SCAN_STEP, best_u + SCAN_STEP, 1e-12);
        let mut h = 1e-3;
        let mut curv = f64::NAN;
        for _ in 0..4 {
            curv = -(kernel(mode + h) - 2.0 * fmax + kernel(mode - h)) / (h * h);
            if !(curv > 0.0) {
                break;
            }
            let sd = curv.powf(-0.5);
            if h <= 0.1 * sd {
                break;
            }
            h = 0.1 * sd;
        }
        if !(curv > 0.0 && curv.is_finite()) {
            return Err(EvalError::Numeric(format!(
                "φ² kernel has no interior maximum near u = {mode}"
            )));
        }
        let sd = curv.powf(-0.5);
        let mut lo = mode - 10.0 * sd;
        let mut hi = mode + 10.0 * sd;
        for _ in 0..50 {
            if !(kernel(lo) > fmax - TAIL_DROP) {
                break;
            }
            lo -= 4.0 * sd;
        }
        for _ in 0..50 {
            if !(kernel(hi) > fmax - TAIL_DROP) {
                break;
            }
            hi += 4.0 * sd;
        }
        let panels = (((hi - lo) / sd).ceil() as usize).clamp(24, 240);
        let rule = CompositeRule::new(lo, hi, panels, 8);
        let log_terms: Vec<f64> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&u, &w)| w.ln() + kernel(u))
            .collect();
        let log_norm = log_sum_exp(&log_terms);
        if !log_norm.is_finite() {
            return Err(EvalError::Numeric(
                "φ² posterior normaliser is not finite".into(),
            ));
        }
        Ok(Self {
            log_phi2: rule.nodes,
            log_w: log_terms.iter().map(|v| v - log_norm).collect(),
            log_norm,
            mode,
            sd,
        })
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.log_phi2
            .iter()
            .zip(&self.log_w)
            .map(|(&u, &w)| w.exp() * f(u.exp()))
            .sum()
    }

    /// `log E[exp(g(φ²))]`.
    pub fn log_expect_exp(&self, g: impl Fn(f64) -> f64) -> f64 {
        let v: Vec<f64> = self
            .log_phi2
            .iter()
            .zip(&self.log_w)
            .map(|(&u, &w)| w + g(u.exp()))
            .collect();
        log_sum_exp(&v)
    }

    pub fn log_pointwise(&self, z: &AnchorPair) -> f64 {
        self.log_expect_exp(|p| z.log_lik(p))
    }

    /// `Σ_j log p(z_j | ·)`.
    pub fn log_product(&self, z: &[AnchorPair]) -> f64 {
        z.iter().map(|p| self.log_pointwise(p)).sum()
    }

    /// Joint predictive by quadrature on this rule's nodes.
    pub fn log_joint(&self, z: &[AnchorPair]) -> f64 {
        let st = AnchorStats::from_pairs(z);
        self.log_expect_exp(|p| st.log_lik(p))
    }

    pub fn loglik_table(&self, z: &[AnchorPair]) -> Result<LogLikTable> {
        let rows = self
            .log_phi2
            .iter()
            .map(|&u| z.iter().map(|p| p.log_lik(u.exp())).collect())
            .collect();
        Ok(LogLikTable::weighted(self.log_w.clone(), rows)?)
    }
}

/// η-SMI fit of the state-space model to a training set, optionally augmented by
/// extra anchor pairs (the calibration data after pooling).
#[derive(Clone, Debug)]
pub struct SsmEta {
    pub model: SsmModel<f64>,
    pub train: SsmDataset<f64>,
    pub extra: AnchorStats,
}

impl SsmEta {
    pub fn new(truth: &SsmTruth, train: SsmDataset<f64>) -> Result<Self> {
        let model = SsmModel::new(truth, train.d_x())?;
        Ok(Self {
            model,
            train,
            extra: AnchorStats::default(),
        })
    }

    /// The same fit with `pairs` appended to the well-specified module.
    pub fn pooled_with(&self, pairs: &[AnchorPair]) -> Self {
        Self {
            extra: self.extra.plus(AnchorStats::from_pairs(pairs)),
            ..self.clone()
        }
    }

    /// Log posterior kernel of `u = log φ²` with `more` anchor residuals multiplied in.
    pub fn log_kernel(&self, u: f64, eta: f64, more: AnchorStats) -> f64 {
        let phi2 = u.exp();
        self.model.log_prior_phi2(phi2)
            + u
            + self.model.log_eta_marginal(phi2, &self.train, eta)
            + self.extra.plus(more).log_lik(phi2)
    }

    pub fn posterior(&self, eta: f64) -> Result<Phi2Posterior> {
        check_eta(eta)?;
        Phi2Posterior::from_log_kernel(|u| self.log_kernel(u, eta, AnchorStats::default()))
    }

    /// Pooled predictive `log p_η(z_1..z_J | data)` as a ratio of normalisers.
    pub fn log_pooled(&self, eta: f64, z: &[AnchorPair]) -> Result<f64> {
        check_eta(eta)?;
        let more = AnchorStats::from_pairs(z);
        let num = Phi2Posterior::from_log_kernel(|u| self.log_kernel(u, eta, more))?;
        Ok(num.log_norm - self.posterior(eta)?.log_norm)
    }

    pub fn log_product(&self, eta: f64, z: &[AnchorPair]) -> Result<f64> {
        Ok(self.posterior(eta)?.log_product(z))
    }

    pub fn log_predictive(&self, kind: PosteriorKind, eta: f64, z: &[AnchorPair]) -> Result<f64> {
        match kind {
            PosteriorKind::Product => self.log_product(eta, z),
            PosteriorKind::Pooled => self.log_pooled(eta, z),
        }
    }

    pub fn lattice_value(
        &self,
        kind: PosteriorKind,
        eta: f64,
        z: &[AnchorPair],
    ) -> Result<LatticeValue> {
        Ok(LatticeValue::exact(self.log_predictive(kind, eta, z)?))
    }

    /// WAIC of the fit at `eta` on the training anchor pairs.
    pub fn waic(&self, eta: f64) -> Result<WaicValue> {
        let post = self.posterior(eta)?;
        Ok(waic(&post.loglik_table(&anchor_pairs(&self.train))?))
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta >= 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(EvalError::Config(format!(
            "learning rate must be finite and non-negative, got {eta}"
        )))
    }
}

/// Centered β-loss of residual `r` at fixed `(φ², β)` with the constants precomputed.
#[derive(Clone, Copy, Debug)]
struct BetaTerm {
    half_log: f64,
    inv2: f64,
    bm1: f64,
    konst: f64,
}

impl BetaTerm {
    fn new(phi2: f64, beta: f64) -> Self {
        Self {
            half_log: -0.5 * (2.0 * PI * phi2).ln(),
            inv2: 0.5 / phi2,
            bm1: beta - 1.0,
            konst: normal_power_integral(phi2, beta) / beta,
        }
    }

    fn eval(&self, r: f64) -> f64 {
        let lp = self.half_log - r * r * self.inv2;
        if self.bm1 == 0.0 {
            -lp + 1.0
        } else {
            -(self.bm1 * lp).exp_m1() / self.bm1 + self.konst
        }
    }
}

/// Inner state of the (η,β)-SMI sampler.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaBetaState {
    pub u: f64,
    /// Auxiliary missing states, block-major.
    pub theta: Vec<f64>,
    terms: Vec<f64>,
}

impl EtaBetaState {
    pub fn phi2(&self) -> f64 {
        self.u.exp()
    }
}

/// Metropolis-within-Gibbs sampler of `π_{η,β}(φ², θ'_M | x)` with `s = [η, b]`, `β = 1/b`.
///
/// One transition is a sweep over every `θ'_m` followed by one update of `u`.
#[derive(Clone, Debug)]
pub struct EtaBetaKernel {
    pub model: SsmModel<f64>,
    pub train: SsmDataset<f64>,
    anchors: AnchorStats,
}

impl EtaBetaKernel {
    pub fn new(truth: &SsmTruth, train: SsmDataset<f64>) -> Result<Self> {
        let model = SsmModel::new(truth, train.d_x())?;
        let anchors = AnchorStats::from_pairs(&anchor_pairs(&train));
        Ok(Self {
            model,
            train,
            anchors,
        })
    }

    fn eta_beta(s: &[f64]) -> (f64, f64) {
        (s[0], 1.0 / s[1])
    }

    fn resid(&self, idx: usize, theta: f64) -> f64 {
        let k = self.train.n_missing_per_block();
        let (i, j) = (idx / k, idx % k);
        self.train.block_missing_x(i)[j] - theta
    }

    fn terms_at(&self, u: f64, beta: f64, theta: &[f64]) -> Vec<f64> {
        let bt = BetaTerm::new(u.exp(), beta);
        theta
            .iter()
            .enumerate()
            .map(|(m, &t)| bt.eval(self.resid(m, t)))
            .collect()
    }

    fn log_u_target(&self, u: f64, eta: f64, terms: &[f64]) -> f64 {
        let phi2 = u.exp();
        self.model.log_prior_phi2(phi2) + u + self.anchors.log_lik(phi2)
            - eta * terms.iter().sum::<f64>()
    }

    /// Log joint density of `(u, θ'_M)` up to a constant.
    pub fn log_target(&self, s: &[f64], state: &EtaBetaState) -> f64 {
        let (eta, beta) = Self::eta_beta(s);
        let terms = self.terms_at(state.u, beta, &state.theta);
        self.log_u_target(state.u, eta, &terms)
            + self.model.log_prior_theta(&state.theta, &self.train)
    }

    fn sweep(&self, s: &[f64], st: &mut EtaBetaState, rng: &mut Rng64) {
        let (eta, beta) = Self::eta_beta(s);
        let k = self.train.n_missing_per_block();
        let phi2 = st.phi2();
        let bt = BetaTerm::new(phi2, beta);
        let bridge = &self.model.bridge;
        let lik_prec = eta * (2.0 * PI * phi2).powf(0.5 * (1.0 - beta)) / phi2;
        let th_scale = 2.4 * (1.0 / (bridge.prec_diag() + lik_prec)).sqrt();
        for i in 0..self.train.n_blocks() {
            let anchors = self.train.block_anchor_theta(i);
            for j in 0..k {
                let m = i * k + j;
                let old = st.theta[m];
                let z: f64 = rng.sample(StandardNormal);
                let new = old + th_scale * z;
                let block = &st.theta[i * k..(i + 1) * k];
                let new_term = bt.eval(self.resid(m, new));
                let log_a = bridge.prior_local(block, anchors, j, new)
                    - bridge.prior_local(block, anchors, j, old)
                    - eta * (new_term - st.terms[m]);
                if rng.random::<f64>().ln() < log_a {
                    st.theta[m] = new;
                    st.terms[m] = new_term;
                }
            }
        }
        let n_missing = st.theta.len() as f64;
        let u_scale = 2.4
            * (2.0 / (self.anchors.m + 2.0 * self.model.prior_a + eta * n_missing + 1.0)).sqrt();
        let z: f64 = rng.sample(StandardNormal);
        let u_new = st.u + u_scale * z;
        let terms_new = self.terms_at(u_new, beta, &st.theta);
        let log_a =
            self.log_u_target(u_new, eta, &terms_new) - self.log_u_target(st.u, eta, &st.terms);
        if rng.random::<f64>().ln() < log_a {
            st.u = u_new;
            st.terms = terms_new;
        }
    }

    /// Draws of `φ²` from a fresh chain at `s`.
    pub fn sample_phi2(
        &self,
        s: &[f64],
        burn: usize,
        draws: usize,
        thin: usize,
        seed: u64,
    ) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        let mut st = self.init(s, &mut rng);
        self.advance(s, &mut st, burn, &mut rng);
        (0..draws)
            .map(|_| {
                self.advance(s, &mut st, thin.max(1), &mut rng);
                st.phi2()
            })
            .collect()
    }

    /// Monte Carlo lattice value of the calibration predictive at `s`.
    pub fn lattice_value(
        &self,
        kind: PosteriorKind,
        s: &[f64],
        z: &[AnchorPair],
        budget: &ChainBudget,
        seed: u64,
    ) -> Result<LatticeValue> {
        let phi2 = self.sample_phi2(s, budget.burn_in, budget.draws, budget.thin, seed);
        let ess = ess_ips(&phi2.iter().map(|p| p.ln()).collect::<Vec<_>>());
        let table = LogLikTable::from_draws(&phi2, z.len(), |&p, j| z[j].log_lik(p))?;
        let (log_pred, mc_se) = match kind {
            PosteriorKind::Product => (table.product(), table.product_mc_se(ess)),
            PosteriorKind::Pooled => (table.pooled().value, table.pooled_mc_se(ess)),
        };
        if !log_pred.is_finite() {
            return Err(EvalError::Numeric(format!(
                "non-finite lattice predictive at s = {s:?}"
            )));
        }
        Ok(LatticeValue { log_pred, mc_se })
    }
}

impl InnerKernel for EtaBetaKernel {
    type State = EtaBetaState;

    fn init(&self, s: &[f64], _rng: &mut Rng64) -> EtaBetaState {
        let (_, beta) = Self::eta_beta(s);
        let u = (self.anchors.ss / self.anchors.m.max(1.0)).max(1e-3).ln();
        let k = self.train.n_missing_per_block();
        let theta: Vec<f64> = (0..self.train.n_blocks())
            .flat_map(|i| self.train.block_missing_x(i)[..k].to_vec())
            .collect();
        let terms = self.terms_at(u, beta, &theta);
        EtaBetaState { u, theta, terms }
    }

    fn advance(&self, s: &[f64], state: &mut EtaBetaState, steps: usize, rng: &mut Rng64) {
        let (_, beta) = Self::eta_beta(s);
        // Cached terms belong to the previous s.
        state.terms = self.terms_at(state.u, beta, &state.theta);
        for _ in 0..steps {
            self.sweep(s, state, rng);
        }
    }
}

/// Chain budget for Monte Carlo lattice values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainBudget {
    pub burn_in: usize,
    pub draws: usize,
    pub thin: usize,
}

impl Default for ChainBudget {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            draws: 2000,
            thin: 5,
        }
    }
}
