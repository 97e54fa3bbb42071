//! Lattice-plus-spline posteriors for the hyperparameter `s`.

use std::path::Path;

use gbcal_core::numerics::CompositeRule;
use gbcal_core::{HyperPoint, Rng64};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HypercalError, Result};
use crate::grid::{Axis, SGrid};
use crate::prior::SPrior;
use crate::surface::Surface;

/// Gauss-Legendre order per lattice cell for normalisation and moments.
const CELL_ORDER: usize = 8;
/// Cells per axis of the piecewise-constant table used for sampling.
const SAMPLING_CELLS_1D: usize = 20_000;
const SAMPLING_CELLS_2D: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosteriorKind {
    /// `ρ(s | y; x) ∝ ρ(s) p_s(y | x)`.
    Pooled,
    /// `ρ(s | y; x) ∝ ρ(s) Π_j p_s(y_j | x)`.
    Product,
}

impl PosteriorKind {
    pub fn name(self) -> &'static str {
        match self {
            PosteriorKind::Pooled => "pooled",
            PosteriorKind::Product => "product",
        }
    }
}

impl std::str::FromStr for PosteriorKind {
    type Err = HypercalError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(Self::Pooled),
            "product" => Ok(Self::Product),
            other => Err(HypercalError::Estimator(format!(
                "unknown loss kind `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeValue {
    pub log_pred: f64,
    pub mc_se: f64,
}

impl LatticeValue {
    pub fn exact(log_pred: f64) -> Self {
        Self {
            log_pred,
            mc_se: 0.0,
        }
    }
}

/// Distribution over `s` that estimators can integrate against and sample from.
pub trait SDistribution {
    fn dim(&self) -> usize;
    fn expect(&self, f: &dyn Fn(&[f64]) -> f64) -> f64;
    fn sample(&self, n: usize, rng: &mut Rng64) -> Vec<Vec<f64>>;
    /// Whether the marginal of `axis` has non-negligible density at 0.
    fn mass_at_zero(&self, axis: usize) -> bool;
}

/// All mass on one point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMass(pub Vec<f64>);

impl SDistribution for PointMass {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn expect(&self, f: &dyn Fn(&[f64]) -> f64) -> f64 {
        f(&self.0)
    }
    fn sample(&self, n: usize, _rng: &mut Rng64) -> Vec<Vec<f64>> {
        vec![self.0.clone(); n]
    }
    fn mass_at_zero(&self, axis: usize) -> bool {
        self.0[axis] == 0.0
    }
}

#[derive(Clone, Debug)]
pub struct GridPosterior {
    pub kind: PosteriorKind,
    pub grid: SGrid,
    /// `NaN` at missing lattice points.
    pub log_pred: Vec<f64>,
    pub log_prior: Vec<f64>,
    pub mc_se: Vec<f64>,
    pub missing: Vec<usize>,
    surface: Surface,
    shift: f64,
    log_norm: f64,
    rules: Vec<CompositeRule>,
    mesh_log_density: Vec<f64>,
}

impl GridPosterior {
    pub fn from_lattice(
        kind: PosteriorKind,
        grid: SGrid,
        prior: &SPrior,
        values: Vec<Option<LatticeValue>>,
    ) -> Result<Self> {
        prior.check_grid(&grid)?;
        if values.len() != grid.len() {
            return Err(HypercalError::Grid(format!(
                "{} values for {} lattice points",
                values.len(),
                grid.len()
            )));
        }
        let pts = grid.points();
        let log_prior: Vec<f64> = pts.iter().map(|p| prior.log_density(p)).collect();
        let mut missing = Vec::new();
        let post: Vec<Option<f64>> = values
            .iter()
            .enumerate()
            .map(|(i, v)| match v {
                Some(v) if v.log_pred.is_finite() => Some(v.log_pred + log_prior[i]),
                _ => {
                    missing.push(i);
                    None
                }
            })
            .collect();
        if !missing.is_empty() {
            log::warn!(
                "{} of {} lattice points missing; interpolating over the rest",
                missing.len(),
                grid.len()
            );
        }
        let shift = post
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(HypercalError::AllMissing);
        }
        let shifted: Vec<Option<f64>> = post.iter().map(|v| v.map(|v| v - shift)).collect();
        let surface = Surface::new(&grid, &shifted)?;
        let rules: Vec<CompositeRule> = grid
            .axes
            .iter()
            .map(|a| CompositeRule::on_breaks(&a.values, CELL_ORDER))
            .collect();
        let nodes: Vec<Vec<f64>> = rules.iter().map(|r| r.nodes.clone()).collect();
        let mut mesh = surface.eval_mesh(&nodes);
        let weights = mesh_weights(&rules);
        let terms: Vec<f64> = mesh.iter().zip(&weights).map(|(v, w)| v + w.ln()).collect();
        let log_norm = gbcal_core::numerics::log_sum_exp(&terms);
        if !log_norm.is_finite() {
            return Err(HypercalError::Estimator(
                "posterior does not normalise".into(),
            ));
        }
        for v in mesh.iter_mut() {
            *v -= log_norm;
        }
        Ok(Self {
            kind,
            log_pred: values
                .iter()
                .map(|v| v.map_or(f64::NAN, |v| v.log_pred))
                .collect(),
            mc_se: values
                .iter()
                .map(|v| v.map_or(f64::NAN, |v| v.mc_se))
                .collect(),
            log_prior,
            missing,
            surface,
            shift,
            log_norm,
            rules,
            mesh_log_density: mesh,
            grid,
        })
    }

    pub fn names(&self) -> Vec<gbcal_core::SAxis> {
        self.grid.names()
    }

    /// Normalised log density; `-∞` outside the lattice bounds.
    pub fn log_density(&self, s: &[f64]) -> f64 {
        if !self.grid.contains(s) {
            return f64::NEG_INFINITY;
        }
        self.surface.eval(s) - self.log_norm
    }

    pub fn density(&self, s: &[f64]) -> f64 {
        self.log_density(s).exp()
    }

    /// Unnormalised log posterior at lattice point `i` (`log_pred + log_prior`).
    pub fn lattice_log_post(&self, i: usize) -> f64 {
        self.log_pred[i] + self.log_prior[i]
    }

    /// Log of the normalising constant of `exp(log_pred + log_prior)`.
    pub fn log_evidence(&self) -> f64 {
        self.log_norm + self.shift
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    /// Quadrature nodes on each axis.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        self.rules.iter().map(|r| r.nodes.clone()).collect()
    }

    /// Marginal density of `axis` at its quadrature nodes.
    pub fn marginal_on_nodes(&self, axis: usize) -> (Vec<f64>, Vec<f64>) {
        let nodes = self.rules[axis].nodes.clone();
        if self.grid.dim() == 1 {
            return (
                nodes,
                self.mesh_log_density.iter().map(|v| v.exp()).collect(),
            );
        }
        let (n0, n1) = (self.rules[0].nodes.len(), self.rules[1].nodes.len());
        let dens = if axis == 0 {
            (0..n0)
                .map(|i| {
                    (0..n1)
                        .map(|j| self.rules[1].weights[j] * self.mesh_log_density[i * n1 + j].exp())
                        .sum()
                })
                .collect()
        } else {
            (0..n1)
                .map(|j| {
                    (0..n0)
                        .map(|i| self.rules[0].weights[i] * self.mesh_log_density[i * n1 + j].exp())
                        .sum()
                })
                .collect()
        };
        (nodes, dens)
    }

    /// Marginal density of `axis` at `v`.
    pub fn marginal_density(&self, axis: usize, v: f64) -> f64 {
        if self.grid.dim() == 1 {
            return self.density(&[v]);
        }
        let a = &self.grid.axes[axis];
        if v < a.lo() || v > a.hi() {
            return 0.0;
        }
        let other = 1 - axis;
        let mut nodes = self.nodes();
        nodes[axis] = vec![v];
        let vals = self.surface.eval_mesh(&nodes);
        vals.iter()
            .zip(&self.rules[other].weights)
            .map(|(l, w)| w * (l - self.log_norm).exp())
            .sum()
    }

    /// Posterior expectation by tensor Gauss-Legendre quadrature.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let weights = mesh_weights(&self.rules);
        let mut acc = 0.0;
        let mut s = vec![0.0; self.grid.dim()];
        for (k, (l, w)) in self.mesh_log_density.iter().zip(&weights).enumerate() {
            self.mesh_point(k, &mut s);
            acc += w * l.exp() * f(&s);
        }
        acc
    }

    fn mesh_point(&self, k: usize, s: &mut [f64]) {
        if self.rules.len() == 1 {
            s[0] = self.rules[0].nodes[k];
        } else {
            let n1 = self.rules[1].nodes.len();
            s[0] = self.rules[0].nodes[k / n1];
            s[1] = self.rules[1].nodes[k % n1];
        }
    }

    /// Draws from a fine piecewise-constant version of the density; `stratified`
    /// spaces the cumulative probabilities evenly.
    pub fn sample_with(&self, n: usize, rng: &mut Rng64, stratified: bool) -> Vec<Vec<f64>> {
        let cells = if self.grid.dim() == 1 {
            SAMPLING_CELLS_1D
        } else {
            SAMPLING_CELLS_2D
        };
        let edges: Vec<Vec<f64>> = self
            .grid
            .axes
            .iter()
            .map(|a| {
                (0..=cells)
                    .map(|i| a.lo() + (a.hi() - a.lo()) * i as f64 / cells as f64)
                    .collect()
            })
            .collect();
        let mids: Vec<Vec<f64>> = edges
            .iter()
            .map(|e| e.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
            .collect();
        let logd = self.surface.eval_mesh(&mids);
        let top = logd.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut cum = Vec::with_capacity(logd.len());
        let mut acc = 0.0;
        for l in &logd {
            acc += (l - top).exp();
            cum.push(acc);
        }
        (0..n)
            .map(|i| {
                let u: f64 = if stratified {
                    (i as f64 + rng.random::<f64>()) / n as f64
                } else {
                    rng.random()
                };
                let k = cum.partition_point(|&c| c < u * acc).min(cum.len() - 1);
                let idx = if self.grid.dim() == 1 {
                    vec![k]
                } else {
                    vec![k / cells, k % cells]
                };
                idx.iter()
                    .zip(&edges)
                    .map(|(&c, e)| e[c] + (e[c + 1] - e[c]) * rng.random::<f64>())
                    .collect()
            })
            .collect()
    }

    /// Smallest lattice interval holding every point within `drop` log units of the
    /// best lattice value, widened by one cell on each side.
    pub fn lattice_support(&self, axis: usize, drop: f64) -> (f64, f64) {
        let a = &self.grid.axes[axis];
        let best = (0..self.grid.len())
            .filter(|i| !self.missing.contains(i))
            .map(|i| self.lattice_log_post(i))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut lo_k = a.len() - 1;
        let mut hi_k = 0;
        for i in 0..self.grid.len() {
            if self.missing.contains(&i) || self.lattice_log_post(i) < best - drop {
                continue;
            }
            let k = self.grid.multi_index(i)[axis];
            lo_k = lo_k.min(k);
            hi_k = hi_k.max(k);
        }
        (
            a.values[lo_k.saturating_sub(1)],
            a.values[(hi_k + 1).min(a.len() - 1)],
        )
    }

    pub fn hyper_point(&self, s: &[f64], base: HyperPoint) -> HyperPoint {
        self.grid.hyper_point(s, base)
    }

    /// CSV `s_<axis0>[,s_<axis1>],log_pred,log_prior,log_post_norm` over the lattice.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = self
            .grid
            .axes
            .iter()
            .map(|a| format!("s_{}", a.name.name()))
            .collect();
        header.extend(["log_pred", "log_prior", "log_post_norm"].map(String::from));
        w.write_record(&header)?;
        for (i, p) in self.grid.points().iter().enumerate() {
            let mut row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            row.push(format!("{:e}", self.log_pred[i]));
            row.push(format!("{:e}", self.log_prior[i]));
            row.push(format!("{:e}", self.log_density(p)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl SDistribution for GridPosterior {
    fn dim(&self) -> usize {
        self.grid.dim()
    }
    fn expect(&self, f: &dyn Fn(&[f64]) -> f64) -> f64 {
        self.integrate(f)
    }
    fn sample(&self, n: usize, rng: &mut Rng64) -> Vec<Vec<f64>> {
        self.sample_with(n, rng, true)
    }
    fn mass_at_zero(&self, axis: usize) -> bool {
        let a = &self.grid.axes[axis];
        if a.lo() > 0.0 {
            return false;
        }
        let (_, dens) = self.marginal_on_nodes(axis);
        let top = dens.iter().copied().fold(0.0, f64::max);
        self.marginal_density(axis, 0.0) > 1e-8 * top
    }
}

fn mesh_weights(rules: &[CompositeRule]) -> Vec<f64> {
    match rules.len() {
        1 => rules[0].weights.clone(),
        _ => rules[0]
            .weights
            .iter()
            .flat_map(|a| rules[1].weights.iter().map(move |b| a * b))
            .collect(),
    }
}

/// Evaluates every lattice point (concurrently) and assembles the posterior.
///
/// `eval` receives the lattice index (for seeding) and the point; an error marks
/// the point missing.
pub fn build_grid_posterior<F>(
    kind: PosteriorKind,
    grid: SGrid,
    prior: &SPrior,
    eval: F,
) -> Result<GridPosterior>
where
    F: Fn(usize, &[f64]) -> std::result::Result<LatticeValue, String> + Sync,
{
    let pts = grid.points();
    let values: Vec<Option<LatticeValue>> = pts
        .par_iter()
        .enumerate()
        .map(|(i, p)| match eval(i, p) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("lattice point {i} {p:?} failed: {e}");
                None
            }
        })
        .collect();
    GridPosterior::from_lattice(kind, grid, prior, values)
}

/// 1-d posterior rebuilt on successively narrower lattices of `n` points until the
/// region within `drop` log units of the maximum spans at least `n / 4` cells.
pub fn build_zoomed_posterior<F>(
    kind: PosteriorKind,
    grid: SGrid,
    prior: &SPrior,
    eval: F,
    max_rounds: usize,
) -> Result<GridPosterior>
where
    F: Fn(usize, &[f64]) -> std::result::Result<LatticeValue, String> + Sync,
{
    if grid.dim() != 1 {
        return Err(HypercalError::Grid(
            "zooming is implemented for one axis".into(),
        ));
    }
    const DROP: f64 = 25.0;
    let n = grid.axes[0].len();
    let name = grid.axes[0].name;
    let mut gp = build_grid_posterior(kind, grid, prior, &eval)?;
    for _ in 0..max_rounds {
        let a = &gp.grid.axes[0];
        let (lo, hi) = gp.lattice_support(0, DROP);
        let cell = (a.hi() - a.lo()) / (n - 1) as f64;
        if hi - lo >= (n / 4) as f64 * cell || hi - lo <= 1e-12 * a.hi().abs().max(1.0) {
            break;
        }
        gp = build_grid_posterior(
            kind,
            SGrid::one(Axis::uniform(name, lo, hi, n)?),
            prior,
            &eval,
        )?;
    }
    Ok(gp)
}
