//! Summaries of how hyperparameter posteriors concentrate as the calibration size grows.

use gbcal_core::numerics::ols_slope;
use gbcal_hypercal::GridPosterior;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

/// Moment-matched `Gamma(shape, rate)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub shape: f64,
    pub rate: f64,
}

impl GammaFit {
    pub fn from_moments(mean: f64, var: f64) -> Result<Self> {
        if !(mean > 0.0 && var > 0.0) {
            return Err(EvalError::Numeric(format!(
                "gamma fit needs positive moments, got {mean}, {var}"
            )));
        }
        Ok(Self {
            shape: mean * mean / var,
            rate: mean / var,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationDiagnostics {
    pub j: Vec<f64>,
    pub sd: Vec<f64>,
    /// Least-squares slope of `log sd` on `log J`.
    pub sd_slope: f64,
    pub pooled_sup_distance: Option<f64>,
    /// Fit to `T = J s` at the largest `J`, when the mode is at 0.
    pub gamma_fit: Option<GammaFit>,
}

/// Posterior standard deviation along `axis`.
pub fn posterior_sd(gp: &GridPosterior, axis: usize) -> f64 {
    let m = gp.integrate(|s| s[axis]);
    gp.integrate(|s| (s[axis] - m).powi(2)).max(0.0).sqrt()
}

pub fn sd_slope(j: &[f64], sd: &[f64]) -> f64 {
    let lx: Vec<f64> = j.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = sd.iter().map(|v| v.ln()).collect();
    ols_slope(&lx, &ly)
}

/// Sup-norm distance between two densities given on the same nodes, each
/// normalised by trapezoid quadrature first.
pub fn sup_distance(nodes: &[f64], f: &[f64], g: &[f64]) -> Result<f64> {
    if nodes.len() != f.len() || nodes.len() != g.len() || nodes.len() < 2 {
        return Err(EvalError::Config(
            "densities must share at least two nodes".into(),
        ));
    }
    let zf = gbcal_core::numerics::trapezoid(nodes, f);
    let zg = gbcal_core::numerics::trapezoid(nodes, g);
    if !(zf > 0.0 && zg > 0.0) {
        return Err(EvalError::Numeric("density integrates to zero".into()));
    }
    Ok(f.iter()
        .zip(g)
        .map(|(a, b)| (a / zf - b / zg).abs())
        .fold(0.0, f64::max))
}

/// Normalised density values at `nodes` from log values, with the maximum removed first.
pub fn density_from_log(log_values: &[f64]) -> Vec<f64> {
    let m = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    log_values.iter().map(|v| (v - m).exp()).collect()
}

/// Gamma fit to `T = J s` for a one-axis posterior.
pub fn boundary_gamma_fit(gp: &GridPosterior, j: f64) -> Result<GammaFit> {
    let m = gp.integrate(|s| s[0]);
    let v = gp.integrate(|s| (s[0] - m).powi(2));
    GammaFit::from_moments(j * m, j * j * v)
}

/// Assembles the diagnostics from posteriors on a ladder of calibration sizes.
pub fn concentration_diagnostics(
    j: &[f64],
    product: &[GridPosterior],
    pooled_vs_limit: Option<f64>,
) -> Result<ConcentrationDiagnostics> {
    if j.len() != product.len() || j.len() < 2 {
        return Err(EvalError::Config(
            "need at least two posteriors matching the J ladder".into(),
        ));
    }
    let sd: Vec<f64> = product.iter().map(|gp| posterior_sd(gp, 0)).collect();
    let last = product.last().expect("non-empty ladder");
    let at_zero = gbcal_hypercal::posterior_mode(last).s[0] <= last.grid.axes[0].lo();
    let gamma_fit = if at_zero {
        boundary_gamma_fit(last, *j.last().unwrap()).ok()
    } else {
        None
    };
    Ok(ConcentrationDiagnostics {
        sd_slope: sd_slope(j, &sd),
        j: j.to_vec(),
        sd,
        pooled_sup_distance: pooled_vs_limit,
        gamma_fit,
    })
}
