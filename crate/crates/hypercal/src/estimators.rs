//! Point estimators of `s`: posterior mean, mode, harmonic mean, KL and WAIC.

use std::collections::BTreeMap;
use std::path::Path;

use gbcal_core::{stream_rng, HyperPoint, Rng64, SAxis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HypercalError, Result};
use crate::grid::SGrid;
use crate::posterior::{GridPosterior, SDistribution};
use crate::predictive::LogLikTable;
use crate::surface::Surface;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub s: Vec<f64>,
    /// The estimate sits on the lattice boundary.
    pub boundary: bool,
}

fn on_boundary(grid: &SGrid, s: &[f64]) -> bool {
    s.iter().zip(&grid.axes).any(|(&v, a)| {
        let tol = 1e-9 * (a.hi() - a.lo());
        (v - a.lo()).abs() <= tol || (a.hi() - v).abs() <= tol
    })
}

pub fn posterior_mean(gp: &GridPosterior) -> Vec<f64> {
    (0..gp.grid.dim()).map(|k| gp.integrate(|s| s[k])).collect()
}

/// Maximiser of the interpolated posterior; boundary maxima are flagged.
pub fn posterior_mode(gp: &GridPosterior) -> PointEstimate {
    let (s, _) = gp.surface().argmax();
    let boundary = on_boundary(&gp.grid, &s);
    PointEstimate { s, boundary }
}

/// `1 / E[1 / s_axis]`.
pub fn harmonic_mean(dist: &impl SDistribution, axis: usize) -> Result<f64> {
    if dist.mass_at_zero(axis) {
        return Err(HypercalError::BoundaryMass { axis: "eta" });
    }
    let inv = dist.expect(&|s: &[f64]| 1.0 / s[axis]);
    if !(inv.is_finite() && inv > 0.0) {
        return Err(HypercalError::BoundaryMass { axis: "eta" });
    }
    Ok(1.0 / inv)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlConfig {
    /// Number of `s` draws from the posterior.
    pub t: usize,
    /// Predictive draws per `s` draw.
    pub j_inner: usize,
    pub batches: usize,
    pub seed: u64,
}

impl KlConfig {
    pub fn standard(seed: u64) -> Self {
        Self {
            t: 400,
            j_inner: 1000,
            batches: 10,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate {
    pub s: Vec<f64>,
    /// `w_i`, the mean log predictive at each candidate.
    pub w: Vec<f64>,
    pub w_se: Vec<f64>,
    /// Jackknife standard error over batches of `s` draws, per axis.
    pub mc_se: Vec<f64>,
    pub boundary: bool,
}

/// Bayes estimator under predictive KL loss.
///
/// Draws `s_t ~ dist`, then `z | s_t` from `sample_z`, and scores each candidate `s'` by
/// `w = mean log p_{s'}(z)`; `log_pred_sum(s', zs)` returns `Σ log p_{s'}(z)` over `zs`.
/// The smoothed `w` is maximised over the candidate lattice.
pub fn kl_estimator<Z, D, S, L>(
    dist: &D,
    candidates: &SGrid,
    config: &KlConfig,
    sample_z: S,
    log_pred_sum: L,
) -> Result<KlEstimate>
where
    Z: Send + Sync,
    D: SDistribution,
    S: Fn(&[f64], usize, &mut Rng64) -> Vec<Z> + Sync,
    L: Fn(&[f64], &[Z]) -> f64 + Sync,
{
    if config.t == 0 || config.j_inner == 0 {
        return Err(HypercalError::Estimator(
            "KL budget must be positive".into(),
        ));
    }
    let batches = config.batches.clamp(2, config.t.max(2));
    let mut rng = stream_rng(config.seed, u64::MAX);
    let s_draws = dist.sample(config.t, &mut rng);
    let zs: Vec<Vec<Z>> = s_draws
        .par_iter()
        .enumerate()
        .map(|(t, s)| sample_z(s, config.j_inner, &mut stream_rng(config.seed, t as u64)))
        .collect();
    let cands = candidates.points();
    // sums[i][b]: Σ log p over the z's of batch b at candidate i; row values for the SE.
    let per_cand: Vec<(Vec<f64>, Vec<f64>)> = cands
        .par_iter()
        .map(|c| {
            let mut sums = vec![0.0; batches];
            let mut per_t = Vec::with_capacity(zs.len());
            for (t, z) in zs.iter().enumerate() {
                let v = log_pred_sum(c, z);
                sums[t * batches / zs.len()] += v;
                per_t.push(v / z.len() as f64);
            }
            (sums, per_t)
        })
        .collect();
    let n_total = (config.t * config.j_inner) as f64;
    let w: Vec<f64> = per_cand
        .iter()
        .map(|(s, _)| s.iter().sum::<f64>() / n_total)
        .collect();
    let w_se: Vec<f64> = per_cand
        .iter()
        .map(|(_, v)| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len().max(2) - 1) as f64;
            (var / v.len() as f64).sqrt()
        })
        .collect();
    let fit = |vals: &[f64]| -> Result<Vec<f64>> {
        let opt: Vec<Option<f64>> = vals.iter().map(|&v| Some(v)).collect();
        Ok(Surface::new(candidates, &opt)?.argmax().0)
    };
    let s = fit(&w)?;
    let counts: Vec<f64> = (0..batches)
        .map(|b| {
            (0..config.t)
                .filter(|t| t * batches / config.t == b)
                .count() as f64
                * config.j_inner as f64
        })
        .collect();
    let mut jack = Vec::with_capacity(batches);
    for b in 0..batches {
        let wb: Vec<f64> = per_cand
            .iter()
            .map(|(sums, _)| (sums.iter().sum::<f64>() - sums[b]) / (n_total - counts[b]))
            .collect();
        jack.push(fit(&wb)?);
    }
    let nb = batches as f64;
    let mc_se = (0..s.len())
        .map(|k| {
            let m = jack.iter().map(|j| j[k]).sum::<f64>() / nb;
            ((nb - 1.0) / nb * jack.iter().map(|j| (j[k] - m).powi(2)).sum::<f64>()).sqrt()
        })
        .collect();
    let boundary = on_boundary(candidates, &s);
    Ok(KlEstimate {
        s,
        w,
        w_se,
        mc_se,
        boundary,
    })
}

/// Per-point log-density variance above which WAIC is considered unreliable.
pub const WAIC_VAR_LIMIT: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaicValue {
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
    /// More than 10% of points have log-density variance above [`WAIC_VAR_LIMIT`].
    pub unreliable: bool,
}

/// `WAIC = -2 (lppd - p_waic)` from training-data log densities over posterior draws.
pub fn waic(table: &LogLikTable) -> WaicValue {
    let lw = table.log_weights();
    let n = table.n_points();
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    let mut heavy = 0usize;
    for i in 0..n {
        lppd += table.pointwise(i).value;
        // Deviations from the first draw keep identical rows at exactly zero variance.
        let x0 = table.row(0)[i];
        let (sw, m1, m2) = (0..table.n_draws()).fold((0.0, 0.0, 0.0), |(sw, m1, m2), t| {
            let w = lw[t].exp();
            let d = table.row(t)[i] - x0;
            (sw + w, m1 + w * d, m2 + w * d * d)
        });
        let v = (m2 / sw - (m1 / sw).powi(2)).max(0.0);
        let t = table.n_draws() as f64;
        let v = if t > 1.0 { v * t / (t - 1.0) } else { 0.0 };
        p_waic += v;
        heavy += (v > WAIC_VAR_LIMIT) as usize;
    }
    let unreliable = heavy as f64 > 0.1 * n as f64;
    if unreliable {
        log::warn!("WAIC: {heavy} of {n} points have log-density variance above {WAIC_VAR_LIMIT}");
    }
    WaicValue {
        waic: -2.0 * (lppd - p_waic),
        lppd,
        p_waic,
        unreliable,
    }
}

/// Spline-refined minimiser of WAIC over the lattice.
pub fn waic_estimator(grid: &SGrid, values: &[WaicValue]) -> Result<(PointEstimate, bool)> {
    let neg: Vec<Option<f64>> = values
        .iter()
        .map(|v| v.waic.is_finite().then_some(-v.waic))
        .collect();
    let (s, _) = Surface::new(grid, &neg)?.argmax();
    let boundary = on_boundary(grid, &s);
    Ok((
        PointEstimate { s, boundary },
        values.iter().any(|v| v.unreliable),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSet {
    pub axes: Vec<SAxis>,
    pub mean: HyperPoint,
    pub mode: HyperPoint,
    pub mode_boundary: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harmonic_mean: Option<HyperPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kl: Option<HyperPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub waic: Option<HyperPoint>,
    pub mc_se: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl EstimatorSet {
    /// Mean, mode and (for an η axis) harmonic mean of `gp`; other coordinates come from `base`.
    pub fn from_posterior(gp: &GridPosterior, base: HyperPoint) -> Self {
        let axes = gp.names();
        let mean = posterior_mean(gp);
        let mode = posterior_mode(gp);
        let mut warnings = Vec::new();
        if mode.boundary {
            warnings.push("posterior mode lies on the lattice boundary".to_string());
        }
        let harmonic_mean =
            axes.iter()
                .position(|a| *a == SAxis::Eta)
                .and_then(|k| match harmonic_mean(gp, k) {
                    Ok(h) => {
                        let mut p = mean.clone();
                        p[k] = h;
                        Some(gp.hyper_point(&p, base))
                    }
                    Err(e) => {
                        warnings.push(e.to_string());
                        None
                    }
                });
        let mut mc_se = BTreeMap::new();
        let se_max = gp
            .mc_se
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        mc_se.insert("lattice_log_pred_max".to_string(), se_max);
        Self {
            mean: gp.hyper_point(&mean, base),
            mode: gp.hyper_point(&mode.s, base),
            mode_boundary: mode.boundary,
            harmonic_mean,
            kl: None,
            waic: None,
            mc_se,
            warnings,
            axes,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
