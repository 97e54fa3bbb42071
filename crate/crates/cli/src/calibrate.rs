//! Lattice and nested-MCMC calibration of the learning-rate hyperparameters.

use std::path::Path;

use gbcal_core::numerics::ks_two_sample;
use gbcal_core::{derive_seed, stream_rng, HyperPoint, Rng64, SAxis};
use gbcal_eval::criteria::nested_config;
use gbcal_eval::{anchor_pairs, EtaBetaKernel, EtaBetaState, SsmEta};
use gbcal_hypercal::{
    build_grid_posterior, nested_mcmc_pooled, nested_mcmc_product, Axis, AxisPrior, EstimatorSet,
    GridPosterior, InnerKernel, LatticeValue, NestedDraws, PosteriorKind, SGrid, SPrior,
};
use gbcal_oracle::{Gaussian, MixtureStats, SmiKind};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{Config, Family, Method, Model};
use crate::data::{load_mixture, load_ssm};
use crate::error::{CliError, Result};

/// Largest two-sample KS distance accepted between nested draws and the lattice posterior.
pub const KS_TOLERANCE: f64 = 0.1;
const LATTICE_SAMPLES: usize = 4000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NestedReport {
    pub axes: Vec<SAxis>,
    pub ks: Vec<f64>,
    pub mean: Vec<f64>,
    pub accept_rate: f64,
    pub scales: Vec<f64>,
    pub draws: usize,
    pub passed: bool,
}

pub struct Calibration {
    pub posterior: GridPosterior,
    pub estimators: EstimatorSet,
    pub nested: Option<(NestedDraws, NestedReport)>,
}

fn smi_kind(f: Family) -> SmiKind {
    match f {
        Family::Gamma => SmiKind::Gamma,
        _ => SmiKind::Eta,
    }
}

fn grid_for(cfg: &Config) -> Result<SGrid> {
    let c = &cfg.calibrate;
    let first = if c.family == Family::Gamma {
        SAxis::Gamma
    } else {
        SAxis::Eta
    };
    let mut axes = vec![Axis::uniform(first, 0.0, c.s_max, c.grid_points)?];
    if c.family == Family::EtaBeta {
        axes.push(Axis::uniform(
            SAxis::B,
            c.b_range[0],
            c.b_range[1],
            c.b_points,
        )?);
    }
    Ok(SGrid::new(axes)?)
}

fn prior_for(cfg: &Config, grid: &SGrid) -> Result<SPrior> {
    let c = &cfg.calibrate;
    if c.prior == "uniform" {
        return Ok(SPrior::uniform_on(grid));
    }
    let first: AxisPrior = c
        .prior
        .parse()
        .map_err(|e: gbcal_hypercal::HypercalError| CliError::Config(e.to_string()))?;
    let mut axes = vec![first];
    if grid.dim() == 2 {
        axes.push(AxisPrior::Uniform {
            lo: c.b_range[0],
            hi: c.b_range[1],
        });
    }
    Ok(SPrior::new(axes)?)
}

fn base_point(f: Family) -> HyperPoint {
    match f {
        Family::Gamma => HyperPoint::gamma(1.0),
        Family::Eta => HyperPoint::eta(1.0),
        Family::EtaBeta => HyperPoint::eta(1.0).with_b(1.0),
    }
}

/// Exact draws of `φ` from the closed-form modular posterior.
struct MixtureInner {
    stats: MixtureStats,
    kind: SmiKind,
}

impl MixtureInner {
    fn draw(&self, s: f64, rng: &mut Rng64) -> f64 {
        let g: Gaussian = self.stats.posterior_phi(self.kind, s).unwrap_or(Gaussian {
            mean: f64::NAN,
            var: 1.0,
        });
        g.mean + g.sd() * Distribution::<f64>::sample(&StandardNormal, rng)
    }
}

impl InnerKernel for MixtureInner {
    type State = f64;
    fn init(&self, s: &[f64], rng: &mut Rng64) -> f64 {
        self.draw(s[0], rng)
    }
    fn advance(&self, s: &[f64], state: &mut f64, _steps: usize, rng: &mut Rng64) {
        *state = self.draw(s[0], rng);
    }
}

fn ln_norm(y: f64, m: f64, v: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * v).ln() - 0.5 * (y - m).powi(2) / v
}

fn run_nested<K: InnerKernel>(
    kernel: &K,
    cfg: &Config,
    grid: &SGrid,
    prior: &SPrior,
    n_points: usize,
    log_lik: impl Fn(&K::State, usize) -> f64 + Sync,
) -> Result<NestedDraws> {
    let c = &cfg.calibrate;
    let mut nc = nested_config(c.kind, c.outer_steps, derive_seed(cfg.seed, 5));
    let bounds = grid.bounds();
    nc.init_s = bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    nc.init_scale.truncate(grid.dim());
    // Scales are stated for a unit-width η range.
    if let (Some(h), Some((lo, hi))) = (nc.init_scale.first_mut(), bounds.first()) {
        *h *= hi - lo;
    }
    Ok(match c.kind {
        PosteriorKind::Product => {
            nested_mcmc_product(kernel, prior, &bounds, log_lik, n_points, &nc)?
        }
        PosteriorKind::Pooled => nested_mcmc_pooled(
            kernel,
            prior,
            &bounds,
            |st| (0..n_points).map(|j| log_lik(st, j)).sum(),
            &nc,
        )?,
    })
}

fn nested_report(gp: &GridPosterior, d: &NestedDraws, seed: u64) -> NestedReport {
    let lattice = gp.sample_with(LATTICE_SAMPLES, &mut stream_rng(seed, 7), true);
    let ks: Vec<f64> = (0..gp.grid.dim())
        .map(|ax| {
            let a: Vec<f64> = d.s.iter().map(|v| v[ax]).collect();
            let b: Vec<f64> = lattice.iter().map(|v| v[ax]).collect();
            ks_two_sample(&a, &b)
        })
        .collect();
    NestedReport {
        axes: gp.names(),
        passed: ks.iter().all(|v| *v < KS_TOLERANCE),
        ks,
        mean: d.mean(),
        accept_rate: d.accept_rate,
        scales: d.scales.clone(),
        draws: d.s.len(),
    }
}

pub fn calibrate(cfg: &Config) -> Result<Calibration> {
    let c = &cfg.calibrate;
    let grid = grid_for(cfg)?;
    let prior = prior_for(cfg, &grid)?;
    let dir = cfg.data_dir();
    let kind = c.kind;
    let (gp, nested) = match cfg.model {
        Model::Mixture => {
            let data = load_mixture(dir)?;
            let truth = cfg.mixture.truth;
            let stats = MixtureStats::from_slices(&data.x1, &data.x2, &truth);
            let smi = smi_kind(c.family);
            log::info!(
                "mixture lattice: {} points, J = {}",
                grid.len(),
                data.y.len()
            );
            let gp = build_grid_posterior(kind, grid.clone(), &prior, |_, s| {
                let v = match kind {
                    PosteriorKind::Pooled => stats.pooled_log_predictive(smi, s[0], &data.y),
                    PosteriorKind::Product => stats.product_log_predictive(smi, s[0], &data.y),
                };
                v.map(LatticeValue::exact).map_err(|e| e.to_string())
            })?;
            let nested = if c.method == Method::Nested {
                let inner = MixtureInner { stats, kind: smi };
                let y = &data.y;
                let d = run_nested(&inner, cfg, &grid, &prior, y.len(), |phi: &f64, j| {
                    ln_norm(y[j], *phi, truth.sigma1_sq)
                })?;
                Some(d)
            } else {
                None
            };
            (gp, nested)
        }
        Model::Ssm => {
            let (train, calib) = load_ssm(dir)?;
            let truth = cfg.ssm.truth;
            let z = anchor_pairs(&calib);
            match c.family {
                Family::EtaBeta => {
                    let kernel = EtaBetaKernel::new(&truth, train)?;
                    log::info!(
                        "state-space (eta, b) lattice: {} points, J = {}",
                        grid.len(),
                        z.len()
                    );
                    let gp = build_grid_posterior(kind, grid.clone(), &prior, |i, s| {
                        kernel
                            .lattice_value(
                                kind,
                                s,
                                &z,
                                &c.chain,
                                derive_seed(cfg.seed, 1000 + i as u64),
                            )
                            .map_err(|e| e.to_string())
                    })?;
                    let nested = if c.method == Method::Nested {
                        Some(run_nested(
                            &kernel,
                            cfg,
                            &grid,
                            &prior,
                            z.len(),
                            |st: &EtaBetaState, j| z[j].log_lik(st.phi2()),
                        )?)
                    } else {
                        None
                    };
                    (gp, nested)
                }
                _ => {
                    let model = SsmEta::new(&truth, train)?;
                    log::info!(
                        "state-space eta lattice: {} points, J = {}",
                        grid.len(),
                        z.len()
                    );
                    let gp = build_grid_posterior(kind, grid.clone(), &prior, |_, s| {
                        model
                            .lattice_value(kind, s[0], &z)
                            .map_err(|e| e.to_string())
                    })?;
                    (gp, None)
                }
            }
        }
    };
    let estimators = EstimatorSet::from_posterior(&gp, base_point(c.family));
    let nested = nested.map(|d| {
        let r = nested_report(&gp, &d, cfg.seed);
        (d, r)
    });
    Ok(Calibration {
        posterior: gp,
        estimators,
        nested,
    })
}

/// Writes `posterior.csv`, `estimators.json` and, for nested runs, `nested_draws.csv` and `nested.json`.
pub fn write_calibration(cal: &Calibration, dir: &Path) -> Result<()> {
    cal.posterior.write_csv(&dir.join("posterior.csv"))?;
    cal.estimators.write_json(&dir.join("estimators.json"))?;
    let gp = &cal.posterior;
    if gp.mc_se.iter().any(|v| *v > 0.0) {
        let mut w = csv::Writer::from_path(dir.join("lattice_mc_se.csv"))?;
        let mut header: Vec<String> = gp
            .grid
            .axes
            .iter()
            .map(|a| format!("s_{}", a.name.name()))
            .collect();
        header.push("mc_se".into());
        w.write_record(&header)?;
        for (p, se) in gp.grid.points().iter().zip(&gp.mc_se) {
            let mut row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            row.push(format!("{se:e}"));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    if let Some((d, r)) = &cal.nested {
        let mut w = csv::Writer::from_path(dir.join("nested_draws.csv"))?;
        w.write_record(gp.grid.axes.iter().map(|a| format!("s_{}", a.name.name())))?;
        for s in &d.s {
            w.write_record(s.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        std::fs::write(dir.join("nested.json"), serde_json::to_string_pretty(r)?)?;
    }
    Ok(())
}
