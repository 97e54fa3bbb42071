//! Normal-inverse-gamma power posteriors for a normal location-scale model.
//!
//! With data `x_1..x_n`, prior `σ² ~ IG(a, b)`, flat prior on `θ` and likelihood
//! raised to the power `η`, the posterior depends on `r = nη` only:
//! `θ | σ² ~ N(x̄, σ²/r)` and `σ² ~ IG(a + (r-1)/2, b + r u/2)` with
//! `u = Σ(x_i - x̄)²/n`. The posterior is proper for `r > r0 = max(0, 1 - 2a)`.

use std::f64::consts::PI;

use gbcal_core::numerics::{gauss_hermite, multistart_max};
use gbcal_core::{derive_seed, simulate_conjugate_normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OracleError, Result};
use crate::special::{digamma, ln_gamma, ln_gamma_ratio_excess};

/// Upper end of the search bracket for the optimal `r`.
pub const R_MAX: f64 = 1e6;

/// Sufficient statistics and prior for the conjugate model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjStats {
    pub n: usize,
    pub xbar: f64,
    /// Mean squared deviation, divisor `n`.
    pub u: f64,
    pub a: f64,
    pub b: f64,
    /// Pseudo-true location of the data-generating process.
    pub mu_star: f64,
}

impl ConjStats {
    pub fn new(n: usize, xbar: f64, u: f64, a: f64, b: f64, mu_star: f64) -> Result<Self> {
        if n < 2 {
            return Err(OracleError::InvalidStats(format!("need n >= 2, got {n}")));
        }
        if !(u > 0.0 && u.is_finite()) {
            return Err(OracleError::InvalidStats(format!(
                "u must be positive, got {u}"
            )));
        }
        if !(a > 0.0 && b > 0.0) {
            return Err(OracleError::InvalidStats(format!(
                "prior needs a, b > 0, got a={a} b={b}"
            )));
        }
        if !xbar.is_finite() || !mu_star.is_finite() {
            return Err(OracleError::InvalidStats("non-finite location".into()));
        }
        Ok(Self {
            n,
            xbar,
            u,
            a,
            b,
            mu_star,
        })
    }

    pub fn from_data(x: &[f64], a: f64, b: f64, mu_star: f64) -> Result<Self> {
        let n = x.len();
        if n < 2 {
            return Err(OracleError::InvalidStats(format!("need n >= 2, got {n}")));
        }
        let xbar = x.iter().sum::<f64>() / n as f64;
        let u = x.iter().map(|v| (v - xbar).powi(2)).sum::<f64>() / n as f64;
        Self::new(n, xbar, u, a, b, mu_star)
    }

    /// Infimum of the `r` values giving a proper posterior.
    pub fn r0(&self) -> f64 {
        (1.0 - 2.0 * self.a).max(0.0)
    }

    /// `Δ = x̄ - μ*`.
    pub fn delta(&self) -> f64 {
        self.xbar - self.mu_star
    }

    fn check_r(&self, r: f64) -> Result<()> {
        if r.is_finite() && r > self.r0() {
            Ok(())
        } else {
            Err(OracleError::Improper(format!(
                "r = {r} must exceed r0 = {}",
                self.r0()
            )))
        }
    }

    pub fn posterior(&self, r: f64) -> Result<PowerPosterior> {
        self.check_r(r)?;
        Ok(PowerPosterior {
            mean: self.xbar,
            r,
            alpha: self.a + 0.5 * (r - 1.0),
            beta: self.b + 0.5 * r * self.u,
        })
    }

    /// Log joint predictive density of `y` (all points share one draw of `(θ, σ²)`).
    pub fn pooled_log_predictive(&self, y: &[f64], r: f64) -> Result<f64> {
        let excess = self.pooled_log_excess(y, r)?;
        Ok(excess + self.log_normal_plugin(y))
    }

    /// Pooled log predictive minus `Σ log N(y_j; x̄, u)`, computed without cancellation.
    pub fn pooled_log_excess(&self, y: &[f64], r: f64) -> Result<f64> {
        let p = self.posterior(r)?;
        let j = y.len() as f64;
        let nu = 2.0 * p.alpha;
        let u = self.u;
        let ln_c_over_u = ((self.b - u * (self.a - 0.5)) / (p.alpha * u)).ln_1p();
        let c = u * ln_c_over_u.exp();
        let s1: f64 = y.iter().map(|v| v - self.xbar).sum();
        let s2: f64 = y.iter().map(|v| (v - self.xbar).powi(2)).sum();
        let q = (s2 - s1 * s1 / (r + j)) / c;
        let gamma_part = ln_gamma_ratio_excess(0.5 * nu, 0.5 * j);
        Ok(gamma_part
            - 0.5 * j * ln_c_over_u
            - 0.5 * (j / r).ln_1p()
            - 0.5 * (nu + j) * (q / nu).ln_1p()
            + 0.5 * s2 / u)
    }

    fn log_normal_plugin(&self, y: &[f64]) -> f64 {
        y.iter()
            .map(|v| -0.5 * (2.0 * PI * self.u).ln() - 0.5 * (v - self.xbar).powi(2) / self.u)
            .sum()
    }

    /// Sum of univariate predictive log densities (each point gets its own draw).
    pub fn product_log_predictive(&self, y: &[f64], r: f64) -> Result<f64> {
        let t = self.posterior(r)?.univariate_t();
        Ok(y.iter().map(|&v| t.ln_pdf(v)).sum())
    }

    /// Expected log predictive density under the truth `N(μ*, 1)`.
    pub fn elppd(&self, r: f64) -> Result<f64> {
        let t = self.posterior(r)?.univariate_t();
        let (z, w) = gauss_hermite(80);
        let s = z
            .iter()
            .zip(&w)
            .map(|(&zi, &wi)| wi * t.ln_pdf(self.mu_star + std::f64::consts::SQRT_2 * zi))
            .sum::<f64>();
        Ok(s / PI.sqrt())
    }

    /// Log power-posterior density at the pseudo-true parameter `(μ*, σ² = 1)`;
    /// the `J → ∞` limit of the pooled target.
    pub fn g(&self, r: f64) -> Result<f64> {
        let p = self.posterior(r)?;
        let d = self.delta();
        Ok(
            0.5 * (r / (2.0 * PI)).ln() - 0.5 * r * d * d + p.alpha * p.beta.ln()
                - ln_gamma(p.alpha)
                - p.beta,
        )
    }

    /// `dg/dr`.
    pub fn g_prime(&self, r: f64) -> Result<f64> {
        let p = self.posterior(r)?;
        let d = self.delta();
        let u = self.u;
        Ok(
            0.5 / r - 0.5 * d * d + 0.5 * p.beta.ln() + p.alpha * u / (2.0 * p.beta)
                - 0.5 * digamma(p.alpha)
                - 0.5 * u,
        )
    }

    /// `lim_{r→∞} g'(r) = (log u + 1 - u - Δ²)/2`, never positive.
    pub fn g_prime_limit(&self) -> f64 {
        let d = self.delta();
        0.5 * (self.u.ln() + 1.0 - self.u - d * d)
    }

    /// Large-`r` coefficient of the product objective: `Σ log p_r(y_j) ≈ const + A_J1/r`.
    pub fn a_j1(&self, y: &[f64]) -> f64 {
        let (a, b, u) = (self.a, self.b, self.u);
        let lin = 2.0 - 4.0 * a + 4.0 * b / u;
        let cst = 4.0 * a - 5.0 - 4.0 * b / u;
        0.25 * y
            .iter()
            .map(|&v| {
                let d = (v - self.xbar).powi(2) / u;
                d * d + lin * d + cst
            })
            .sum::<f64>()
    }

    /// `lim_{J→∞} A_J1 / J` with test points drawn from `N(μ*, 1)`.
    pub fn a_bar(&self) -> f64 {
        let (a, b, u) = (self.a, self.b, self.u);
        let d2 = self.delta().powi(2);
        (3.0 + 6.0 * d2 + d2 * d2) / (4.0 * u * u) + (0.5 - a + b / u) * (1.0 + d2) / u + a
            - 1.25
            - b / u
    }

    /// Large-`r` coefficient of the pooled objective, `log p_r(y) - Σ log N(y_j; x̄, u) ≈ A_1J/r`,
    /// fitted from a cubic polynomial in `1/r` over a geometric ladder of large `r`.
    pub fn a_1j(&self, y: &[f64]) -> Result<f64> {
        let j = y.len().max(1) as f64;
        let r_start = (200.0 * j).max(1e4);
        let rs: Vec<f64> = (0..8).map(|k| r_start * 2f64.powi(k)).collect();
        let mut fs = Vec::with_capacity(rs.len());
        for &r in &rs {
            fs.push(r * self.pooled_log_excess(y, r)?);
        }
        // r·excess as a cubic in 1/r, with r rescaled so the design is well conditioned.
        let t: Vec<f64> = rs.iter().map(|r| r_start / r).collect();
        Ok(poly_intercept(&t, &fs, 3))
    }

    /// Maximise `objective` over `r ∈ (r0, R_MAX]` and classify the optimum.
    pub fn optimal_r(&self, objective: ConjObjective, y: &[f64]) -> Result<OptimalR> {
        let f = |r: f64| -> f64 {
            let v = match objective {
                ConjObjective::Pooled => self.pooled_log_predictive(y, r),
                ConjObjective::Product => self.product_log_predictive(y, r),
                ConjObjective::PooledLimit => self.g(r),
                ConjObjective::Elppd => self.elppd(r),
            };
            v.unwrap_or(f64::NEG_INFINITY)
        };
        let lo = (self.r0() + 1e-6).max(1e-6).ln();
        let hi = R_MAX.ln();
        let (lr, best) = multistart_max(|lr| f(lr.exp()), lo, hi, 40, 1e-10);
        let r_hat = lr.exp();
        let tail = match objective {
            ConjObjective::Pooled => self.a_1j(y)?,
            ConjObjective::Product => self.a_j1(y),
            ConjObjective::PooledLimit => self.g_prime_limit(),
            ConjObjective::Elppd => self.a_bar(),
        };
        let increasing_at_edge = f(R_MAX) > f(R_MAX / 1.01);
        let at_edge = r_hat >= R_MAX / 1.02;
        Ok(OptimalR {
            r: r_hat,
            objective: best,
            infinite: increasing_at_edge && at_edge && tail <= 0.0,
            at_bracket_edge: at_edge,
            tail_coefficient: tail,
        })
    }
}

/// Objective whose maximiser defines the calibrated `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConjObjective {
    Pooled,
    Product,
    /// `J → ∞` limit of the pooled objective, [`ConjStats::g`].
    PooledLimit,
    /// `J → ∞` limit of the product objective, [`ConjStats::elppd`].
    Elppd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalR {
    pub r: f64,
    pub objective: f64,
    /// Objective still increasing at `R_MAX` and the tail coefficient is non-positive.
    pub infinite: bool,
    pub at_bracket_edge: bool,
    pub tail_coefficient: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerPosterior {
    pub mean: f64,
    pub r: f64,
    /// Inverse-gamma shape.
    pub alpha: f64,
    /// Inverse-gamma scale.
    pub beta: f64,
}

impl PowerPosterior {
    /// Log joint posterior density at `(θ, σ²)`.
    pub fn ln_pdf(&self, theta: f64, sigma2: f64) -> f64 {
        if sigma2 <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let var = sigma2 / self.r;
        -0.5 * (2.0 * PI * var).ln() - 0.5 * (theta - self.mean).powi(2) / var
            + self.alpha * self.beta.ln()
            - ln_gamma(self.alpha)
            - (self.alpha + 1.0) * sigma2.ln()
            - self.beta / sigma2
    }

    /// Predictive for a single new point: Student-t with `2α` degrees of freedom.
    pub fn univariate_t(&self) -> StudentT {
        StudentT {
            df: 2.0 * self.alpha,
            loc: self.mean,
            scale2: (1.0 + 1.0 / self.r) * self.beta / self.alpha,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudentT {
    pub df: f64,
    pub loc: f64,
    pub scale2: f64,
}

impl StudentT {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let nu = self.df;
        let z2 = (x - self.loc).powi(2) / self.scale2;
        ln_gamma_ratio_excess(0.5 * nu, 0.5) + 0.5 * (0.5 * nu).ln()
            - 0.5 * (nu * PI * self.scale2).ln()
            - 0.5 * (nu + 1.0) * (z2 / nu).ln_1p()
    }
}

fn poly_intercept(t: &[f64], f: &[f64], degree: usize) -> f64 {
    let m = degree + 1;
    let mut ata = nalgebra::DMatrix::<f64>::zeros(m, m);
    let mut atb = nalgebra::DVector::<f64>::zeros(m);
    for (&ti, &fi) in t.iter().zip(f) {
        let pw: Vec<f64> = (0..m).map(|k| ti.powi(k as i32)).collect();
        for r in 0..m {
            atb[r] += pw[r] * fi;
            for c in 0..m {
                ata[(r, c)] += pw[r] * pw[c];
            }
        }
    }
    ata.lu().solve(&atb).map(|s| s[0]).unwrap_or(f64::NAN)
}

/// Inverse-gamma `(a, b)` with the given mean and variance (`mean > 0`, `var > 0`).
pub fn ig_prior_from_moments(mean: f64, var: f64) -> (f64, f64) {
    let a = 2.0 + mean * mean / var;
    (a, mean * (a - 1.0))
}

/// One row of the interior-optimum table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteriorRow {
    pub prior_mean: f64,
    pub prior_var: f64,
    pub a: f64,
    pub b: f64,
    /// Fraction of replicates with `A_J1 > 0` (finite product optimum).
    pub p_product: f64,
    /// Fraction of replicates with `Ā > 0` (finite expected-log-predictive optimum).
    pub p_elppd: f64,
    /// Larger of the two binomial standard errors.
    pub se: f64,
    pub replicates: usize,
}

/// Monte Carlo frequency of finite product and ELPPD optima under a well-specified `N(0, 1)` truth.
pub fn interior_probability(
    prior_mean: f64,
    prior_var: f64,
    n: usize,
    j: usize,
    replicates: usize,
    seed: u64,
) -> Result<InteriorRow> {
    let (a, b) = ig_prior_from_moments(prior_mean, prior_var);
    let counts: Result<Vec<(bool, bool)>> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let rs = derive_seed(seed, rep as u64);
            let x = simulate_conjugate_normal::<f64>(0.0, n, rs);
            let y = simulate_conjugate_normal::<f64>(0.0, j, derive_seed(rs, 1));
            let st = ConjStats::from_data(x.values(), a, b, 0.0)?;
            Ok((st.a_j1(y.values()) > 0.0, st.a_bar() > 0.0))
        })
        .collect();
    let counts = counts?;
    let m = replicates.max(1) as f64;
    let p_product = counts.iter().filter(|c| c.0).count() as f64 / m;
    let p_elppd = counts.iter().filter(|c| c.1).count() as f64 / m;
    let se = |p: f64| (p * (1.0 - p) / m).sqrt();
    Ok(InteriorRow {
        prior_mean,
        prior_var,
        a,
        b,
        p_product,
        p_elppd,
        se: se(p_product).max(se(p_elppd)),
        replicates,
    })
}

/// Prior settings tabulated for the interior-optimum study, as `(mean, variance)` of `σ²`.
pub const INTERIOR_TABLE_PRIORS: [(f64, f64); 5] =
    [(0.5, 0.1), (1.0, 0.1), (4.0, 0.1), (1.0, 1.0), (2.0, 4.0)];
