//! Acceptance criteria. Each check is a pure function of fixed seeds and a budget,
//! and reports the numbers it compared so that reruns can be checked bit for bit.

use std::f64::consts::PI;

use gbcal_core::numerics::{ks_two_sample, log_weighted_sum_exp, median, CompositeRule};
use gbcal_core::{
    derive_seed, simulate_conjugate_normal, simulate_mixture, simulate_ssm, split_ssm_blocks,
    stream_rng, MixtureTruth, Rng64, SAxis, SplitSpec, SsmTruth,
};
use gbcal_hypercal::{
    build_grid_posterior, build_zoomed_posterior, harmonic_mean, kl_estimator, nested_mcmc_pooled,
    nested_mcmc_product, Axis, KlConfig, LatticeValue, LogLikTable, NestedConfig, PointMass,
    PosteriorKind, SGrid, SPrior,
};
use gbcal_oracle::conjugate::{
    interior_probability, ConjStats, PowerPosterior, INTERIOR_TABLE_PRIORS,
};
use gbcal_oracle::{aghq_auto, laplace_at_likelihood_mode, tv_distance, MixtureStats, SmiKind};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{density_from_log, posterior_sd, sd_slope, sup_distance};
use crate::error::{EvalError, Result};
use crate::ssm::{anchor_pairs, AnchorPair, ChainBudget, EtaBetaKernel, EtaBetaState, SsmEta};
use crate::study::{ssm_replicate_study, SsmStudyConfig};

/// Reference probabilities of a finite product optimum and a finite ELPPD optimum,
/// in the order of [`INTERIOR_TABLE_PRIORS`].
pub const INTERIOR_REFERENCE: [(f64, f64); 5] = [
    (0.62, 0.73),
    (0.72, 0.94),
    (0.62, 0.71),
    (0.60, 0.77),
    (0.59, 0.71),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// The budgets the tolerances are stated for.
    Full,
    /// Small budgets for smoke runs and replay checks; pass/fail is not meaningful.
    Reduced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    /// Every number the verdict depends on, in a fixed order.
    pub values: Vec<f64>,
}

impl CriterionReport {
    fn new(id: u8, title: &str, passed: bool, detail: String, values: Vec<f64>) -> Self {
        Self {
            id,
            title: title.into(),
            passed,
            detail,
            values,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {}: {} {} ({})",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail
        )
    }
}

fn full(b: Budget) -> bool {
    b == Budget::Full
}

fn normal_draws(mean: f64, sd: f64, n: usize, rng: &mut Rng64) -> Vec<f64> {
    (0..n)
        .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn ln_norm(y: f64, m: f64, v: f64) -> f64 {
    -0.5 * (2.0 * PI * v).ln() - 0.5 * (y - m).powi(2) / v
}

fn exact(v: Result<f64>) -> std::result::Result<LatticeValue, String> {
    v.map(LatticeValue::exact).map_err(|e| e.to_string())
}

/// Frequencies of finite optima in the conjugate model for each prior column.
pub fn c1_interior_probabilities(budget: Budget) -> Result<CriterionReport> {
    if full(budget) {
        interior_table(10_000, &[0, 1, 2, 3, 4])
    } else {
        interior_table(1_000, &[1])
    }
}

/// The finite-optimum table with `reps` replicates over the prior columns `cols`.
pub fn interior_table(reps: usize, cols: &[usize]) -> Result<CriterionReport> {
    let mut values = Vec::new();
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for &c in cols {
        let (m, v) = INTERIOR_TABLE_PRIORS[c];
        let row = interior_probability(m, v, 10, 10, reps, derive_seed(101, c as u64))?;
        let (rp, re) = INTERIOR_REFERENCE[c];
        worst = worst
            .max((row.p_product - rp).abs())
            .max((row.p_elppd - re).abs());
        values.extend([row.p_product, row.p_elppd]);
        detail.push(format!(
            "({m},{v}): {:.3}/{:.3} vs {rp}/{re}",
            row.p_product, row.p_elppd
        ));
    }
    Ok(CriterionReport::new(
        1,
        "finite-optimum probabilities in the conjugate model",
        worst <= 0.02,
        format!("N={reps}, max gap {worst:.4}; {}", detail.join(", ")),
        values,
    ))
}

fn nig_draws(p: &PowerPosterior, t: usize, rng: &mut Rng64) -> Vec<(f64, f64)> {
    let g = Gamma::new(p.alpha, 1.0).expect("positive shape");
    (0..t)
        .map(|_| {
            let s2 = p.beta / g.sample(rng);
            let th = p.mean + (s2 / p.r).sqrt() * rng.sample::<f64, _>(StandardNormal);
            (th, s2)
        })
        .collect()
}

/// `log ∫∫ Π_j N(y_j; θ, σ²) π(θ, σ² | x) dθ dσ²` by Gauss-Legendre in `(θ, log σ²)`.
pub fn conjugate_pooled_by_quadrature(p: &PowerPosterior, y: &[f64]) -> f64 {
    let j = y.len() as f64;
    let ybar = if y.is_empty() {
        0.0
    } else {
        y.iter().sum::<f64>() / j
    };
    let centre = (p.beta / p.alpha).ln();
    let half = 14.0 / p.alpha.sqrt();
    let outer = CompositeRule::new(centre - half, centre + half, 120, 10);
    let inner_logs: Vec<f64> = outer
        .nodes
        .iter()
        .map(|&u| {
            let s2 = u.exp();
            let m = (p.r * p.mean + j * ybar) / (p.r + j);
            let sd = (s2 / (p.r + j)).sqrt();
            let inner = CompositeRule::new(m - 14.0 * sd, m + 14.0 * sd, 24, 10);
            let terms: Vec<f64> = inner
                .nodes
                .iter()
                .map(|&th| p.ln_pdf(th, s2) + y.iter().map(|&v| ln_norm(v, th, s2)).sum::<f64>())
                .collect();
            log_weighted_sum_exp(&terms, &inner.weights) + u
        })
        .collect();
    log_weighted_sum_exp(&inner_logs, &outer.weights)
}

/// Monte Carlo and quadrature predictives against closed forms in the conjugate model.
pub fn c2_conjugate_exactness(budget: Budget) -> Result<CriterionReport> {
    let t = if full(budget) { 100_000 } else { 5_000 };
    let x = simulate_conjugate_normal::<f64>(0.0, 10, 201)
        .values()
        .to_vec();
    let stats = ConjStats::from_data(&x, 2.0, 1.0, 0.0)?;
    let r = 10.0 * 0.7;
    let post = stats.posterior(r)?;
    let draws = nig_draws(&post, t, &mut stream_rng(202, 0));
    let y_all = simulate_conjugate_normal::<f64>(0.0, 10, 203)
        .values()
        .to_vec();
    let (mut mc_gap, mut quad_gap) = (0.0f64, 0.0f64);
    let mut values = Vec::new();
    for j in [1usize, 3, 10] {
        let y = &y_all[..j];
        let table = LogLikTable::from_draws(&draws, j, |d, i| ln_norm(y[i], d.0, d.1))?;
        let pooled = stats.pooled_log_predictive(y, r)?;
        let product = stats.product_log_predictive(y, r)?;
        let mc_pooled = table.pooled().value;
        let mc_product = table.product();
        let q_pooled = conjugate_pooled_by_quadrature(&post, y);
        let q_product: f64 = y
            .iter()
            .map(|v| conjugate_pooled_by_quadrature(&post, std::slice::from_ref(v)))
            .sum();
        mc_gap = mc_gap
            .max((mc_pooled - pooled).abs())
            .max((mc_product - product).abs());
        quad_gap = quad_gap
            .max((q_pooled - pooled).abs())
            .max((q_product - product).abs());
        values.extend([mc_pooled, mc_product, q_pooled, q_product, pooled, product]);
    }
    Ok(CriterionReport::new(
        2,
        "conjugate predictives by Monte Carlo and quadrature",
        mc_gap < 0.05 && quad_gap < 1e-4,
        format!("T={t}, J in {{1,3,10}}: max MC gap {mc_gap:.4} (< 0.05), max quadrature gap {quad_gap:.2e} (< 1e-4)"),
        values,
    ))
}

fn default_mixture(seed: u64, n1: usize, n2: usize) -> Result<(MixtureStats, MixtureTruth)> {
    let truth = MixtureTruth::default();
    let d = simulate_mixture::<f64>(&truth, n1, n2, seed)?;
    Ok((MixtureStats::from_data(&d, &truth), truth))
}

/// The pooled posterior at large `J` against the normalised limit `π_s(ȳ | x)`.
pub fn c3_pooled_limit(budget: Budget) -> Result<CriterionReport> {
    let j = if full(budget) { 10_000 } else { 1_000 };
    let (stats, truth) = default_mixture(301, 30, 60)?;
    let y = normal_draws(
        truth.phi_star,
        truth.sigma1_sq.sqrt(),
        j,
        &mut stream_rng(302, 0),
    );
    let ybar = y.iter().sum::<f64>() / j as f64;
    let nodes: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
    let pooled: Vec<f64> = nodes
        .iter()
        .map(|&s| stats.pooled_log_predictive(SmiKind::Eta, s, &y))
        .collect::<std::result::Result<_, _>>()?;
    let limit: Vec<f64> = nodes
        .iter()
        .map(|&s| Ok(stats.posterior_phi(SmiKind::Eta, s)?.ln_pdf(ybar)))
        .collect::<Result<_>>()?;
    let d = sup_distance(
        &nodes,
        &density_from_log(&pooled),
        &density_from_log(&limit),
    )?;
    Ok(CriterionReport::new(
        3,
        "pooled posterior approaches the normalised limit density",
        d < 0.05,
        format!("J={j}, sup distance {d:.4} (< 0.05)"),
        vec![d],
    ))
}

/// `Σ_j log N(y_j; μ_s, v_s + σ1²)` from `(J, Σy, Σy²)`.
fn product_from_sums(stats: &MixtureStats, s: f64, sums: (f64, f64, f64)) -> Result<f64> {
    let g = stats.posterior_phi(SmiKind::Eta, s)?;
    let v = g.var + stats.sigma1_sq;
    let (j, s1, s2) = sums;
    Ok(-0.5 * j * (2.0 * PI * v).ln() - 0.5 * (s2 - 2.0 * g.mean * s1 + j * g.mean * g.mean) / v)
}

fn mean_product_sd(
    stats: &MixtureStats,
    ys: &[Vec<f64>],
    j: usize,
    sums_at: impl Fn(usize, usize) -> (f64, f64, f64),
) -> Result<f64> {
    let grid = SGrid::uniform_1d(SAxis::Eta, 0.0, 1.0, 41)?;
    let prior = SPrior::uniform_on(&grid);
    let mut acc = 0.0;
    for k in 0..ys.len() {
        let sums = sums_at(k, j);
        let gp = build_zoomed_posterior(
            PosteriorKind::Product,
            grid.clone(),
            &prior,
            |_, s| exact(product_from_sums(stats, s[0], sums)),
            8,
        )?;
        acc += posterior_sd(&gp, 0);
    }
    Ok(acc / ys.len() as f64)
}

/// Product posterior sd against `J`, averaged over calibration draws for one training set.
/// Also reports the slope over a longer ladder as a diagnostic.
pub fn c4_product_concentration(budget: Budget) -> Result<CriterionReport> {
    let (ladder, reps): (&[usize], usize) = if full(budget) {
        (&[100, 1_000, 10_000], 20)
    } else {
        (&[100, 1_000], 3)
    };
    let (stats, truth) = default_mixture(401, 30, 60)?;
    let jmax = *ladder.last().expect("non-empty ladder");
    let ys: Vec<Vec<f64>> = (0..reps)
        .map(|k| {
            normal_draws(
                truth.phi_star,
                truth.sigma1_sq.sqrt(),
                jmax,
                &mut stream_rng(402, k as u64),
            )
        })
        .collect();
    let prefix = |k: usize, j: usize| {
        let y = &ys[k][..j];
        (
            j as f64,
            y.iter().sum::<f64>(),
            y.iter().map(|v| v * v).sum::<f64>(),
        )
    };
    let sd: Vec<f64> = ladder
        .iter()
        .map(|&j| mean_product_sd(&stats, &ys, j, prefix))
        .collect::<Result<_>>()?;
    let js: Vec<f64> = ladder.iter().map(|&j| j as f64).collect();
    let slope = sd_slope(&js, &sd);

    // Beyond the stated ladder, sums of normal draws are drawn directly.
    let long: &[usize] = if full(budget) {
        &[10_000, 100_000, 1_000_000, 10_000_000]
    } else {
        &[10_000, 100_000]
    };
    let sigma1 = truth.sigma1_sq.sqrt();
    let long_sums = |k: usize, j: usize| {
        let mut rng = stream_rng(403, (k * 100 + j.ilog10() as usize) as u64);
        let jf = j as f64;
        let s1 = jf * truth.phi_star + sigma1 * jf.sqrt() * rng.sample::<f64, _>(StandardNormal);
        let chi = Gamma::new(0.5 * (jf - 1.0), 2.0)
            .expect("positive shape")
            .sample(&mut rng);
        (jf, s1, truth.sigma1_sq * chi + s1 * s1 / jf)
    };
    let long_sd: Vec<f64> = long
        .iter()
        .map(|&j| mean_product_sd(&stats, &ys, j, long_sums))
        .collect::<Result<_>>()?;
    let long_js: Vec<f64> = long.iter().map(|&j| j as f64).collect();
    let long_slope = sd_slope(&long_js, &long_sd);

    let mut values = sd.clone();
    values.push(slope);
    values.extend(&long_sd);
    values.push(long_slope);
    Ok(CriterionReport::new(
        4,
        "product posterior concentrates at rate 1/sqrt(J)",
        (slope + 0.5).abs() <= 0.1,
        format!(
            "J={ladder:?}, mean sd {sd:.4?}, slope {slope:.3} (-0.5 +/- 0.1); diagnostic J={long:?}: sd {long_sd:.4?}, slope {long_slope:.3}"
        ),
        values,
    ))
}

/// Total variation between η-SMI and γ-SMI `φ` posteriors, large versus small samples.
pub fn c5_eta_gamma_convergence(budget: Budget) -> Result<CriterionReport> {
    let big = if full(budget) { 1_000_000 } else { 100_000 };
    let tv_at = |n1: usize, seed: u64| -> Result<f64> {
        let (stats, _) = default_mixture(seed, n1, 2 * n1)?;
        Ok(tv_distance(
            stats.posterior_phi(SmiKind::Eta, 0.3)?,
            stats.posterior_phi(SmiKind::Gamma, 0.3)?,
        ))
    };
    let tv_big = tv_at(big, 501)?;
    let tv_small = tv_at(30, 502)?;
    Ok(CriterionReport::new(
        5,
        "eta-SMI and gamma-SMI agree for large samples",
        tv_big < 0.02 && tv_small > tv_big,
        format!("n1={big}: TV {tv_big:.5} (< 0.02); n1=30: TV {tv_small:.4}"),
        vec![tv_big, tv_small],
    ))
}

/// Settings of the nested-MCMC comparison for one calibration size.
#[derive(Clone, Debug)]
pub struct NestedCheck {
    pub j: usize,
    pub kind: PosteriorKind,
    pub ks: [f64; 2],
    pub accept: f64,
}

pub fn nested_config(kind: PosteriorKind, outer: usize, seed: u64) -> NestedConfig {
    let mut cfg = match kind {
        // Pseudo-marginal chains mix best at a lower acceptance rate than exact ones.
        PosteriorKind::Product => {
            let mut c = NestedConfig::new(vec![0.5, 1.0], vec![0.1, 0.25], seed);
            c.target_accept = 0.15;
            c
        }
        PosteriorKind::Pooled => NestedConfig::new(vec![0.5, 1.0], vec![0.2, 0.5], seed),
    };
    cfg.outer_len = outer;
    cfg.burn_in = outer / 5;
    cfg
}

/// Nested MCMC and the lattice posterior for the SSM `(η, b)` posterior.
pub fn c6_nested_vs_grid(budget: Budget) -> Result<CriterionReport> {
    let truth = SsmTruth::default();
    let x = simulate_ssm::<f64>(&truth, 10, 6, 601)?;
    let z_all = anchor_pairs(&simulate_ssm::<f64>(&truth, 40, 6, 602)?);
    let kernel = EtaBetaKernel::new(&truth, x)?;
    let (sizes, lattice, chain, outer): (&[usize], (usize, usize), ChainBudget, [usize; 2]) =
        if full(budget) {
            (
                &[10, 20, 40],
                (11, 12),
                ChainBudget {
                    burn_in: 1000,
                    draws: 4000,
                    thin: 5,
                },
                [6000, 5000],
            )
        } else {
            (
                &[10],
                (4, 4),
                ChainBudget {
                    burn_in: 200,
                    draws: 400,
                    thin: 5,
                },
                [300, 300],
            )
        };
    let grid = SGrid::new(vec![
        Axis::uniform(SAxis::Eta, 0.0, 1.0, lattice.0)?,
        Axis::uniform(SAxis::B, 0.25, 3.0, lattice.1)?,
    ])?;
    let prior = SPrior::uniform_on(&grid);
    let mut checks = Vec::new();
    for &j in sizes {
        let z: &[AnchorPair] = &z_all[..j];
        for (k, kind) in [PosteriorKind::Product, PosteriorKind::Pooled]
            .into_iter()
            .enumerate()
        {
            let tag = 10 * j as u64 + k as u64;
            let gp = build_grid_posterior(kind, grid.clone(), &prior, |i, s| {
                kernel
                    .lattice_value(kind, s, z, &chain, derive_seed(603, tag * 1000 + i as u64))
                    .map_err(|e| e.to_string())
            })?;
            let gs = gp.sample_with(4000, &mut stream_rng(604, tag), true);
            let cfg = nested_config(kind, outer[k], derive_seed(605, tag));
            let d = match kind {
                PosteriorKind::Product => nested_mcmc_product(
                    &kernel,
                    &prior,
                    &grid.bounds(),
                    |st: &EtaBetaState, i| z[i].log_lik(st.phi2()),
                    j,
                    &cfg,
                )?,
                PosteriorKind::Pooled => nested_mcmc_pooled(
                    &kernel,
                    &prior,
                    &grid.bounds(),
                    |st: &EtaBetaState| z.iter().map(|p| p.log_lik(st.phi2())).sum(),
                    &cfg,
                )?,
            };
            let ks = [0, 1].map(|ax| {
                let a: Vec<f64> = d.s.iter().map(|v| v[ax]).collect();
                let b: Vec<f64> = gs.iter().map(|v| v[ax]).collect();
                ks_two_sample(&a, &b)
            });
            checks.push(NestedCheck {
                j,
                kind,
                ks,
                accept: d.accept_rate,
            });
        }
    }
    let worst = checks.iter().flat_map(|c| c.ks).fold(0.0, f64::max);
    let detail: Vec<String> = checks
        .iter()
        .map(|c| {
            format!(
                "J={} {}: KS {:.3}/{:.3} acc {:.2}",
                c.j,
                c.kind.name(),
                c.ks[0],
                c.ks[1],
                c.accept
            )
        })
        .collect();
    let values = checks
        .iter()
        .flat_map(|c| [c.ks[0], c.ks[1], c.accept])
        .collect();
    Ok(CriterionReport::new(
        6,
        "nested MCMC agrees with the lattice posterior",
        worst < 0.1,
        format!("max KS {worst:.3} (< 0.1); {}", detail.join(", ")),
        values,
    ))
}

fn ssm_ratio_medians(cfg: &SsmStudyConfig) -> Result<(f64, f64, usize)> {
    let study = ssm_replicate_study(cfg)?;
    let pick = |reference: &str| -> Vec<f64> {
        study
            .records
            .iter()
            .filter_map(|r| {
                r.ratio(PosteriorKind::Product, "mean", reference)
                    .map(|x| x.value)
            })
            .collect()
    };
    let (b, c) = (pick("bayes"), pick("cut"));
    if b.is_empty() || c.is_empty() {
        return Err(EvalError::Numeric(
            "no replicate produced a risk ratio".into(),
        ));
    }
    Ok((median(&b), median(&c), b.len()))
}

/// Direction of SSM risk ratios of the calibrated update against Bayes and Cut.
pub fn c7_ssm_risk_direction(budget: Budget) -> Result<CriterionReport> {
    let base = if full(budget) {
        SsmStudyConfig {
            replicates: 20,
            ..SsmStudyConfig::default()
        }
    } else {
        SsmStudyConfig {
            replicates: 2,
            n_test_sets: 3,
            test_blocks: 20,
            reference_blocks: 100,
            grid_points: 11,
            ..SsmStudyConfig::default()
        }
    };
    let base = SsmStudyConfig {
        kinds: vec![PosteriorKind::Product],
        waic: false,
        seed: 701,
        ..base
    };
    let at = |phi_m: f64| SsmStudyConfig {
        truth: SsmTruth {
            phi_m_star: phi_m,
            ..base.truth
        },
        ..base.clone()
    };
    let (mis_bayes, mis_cut, n_mis) = ssm_ratio_medians(&at(0.5))?;
    let (well_bayes, _, n_well) = ssm_ratio_medians(&at(1.0))?;
    let passed = mis_bayes > 1.0 && mis_cut > 1.0 && well_bayes < 1.0;
    Ok(CriterionReport::new(
        7,
        "SSM risk-ratio direction under misspecification",
        passed,
        format!(
            "phi_M=0.5 ({n_mis} reps): median R(mean,1) {mis_bayes:.3} (> 1), median R(mean,0) {mis_cut:.3} (> 1); \
             phi_M=1 ({n_well} reps): median R(mean,1) {well_bayes:.3} (< 1)"
        ),
        vec![mis_bayes, mis_cut, well_bayes],
    ))
}

fn laplace_rel_error(x1: &[f64], x2: &[f64], truth: &MixtureTruth) -> Result<f64> {
    let st = MixtureStats::from_slices(x1, x2, truth);
    let n2 = x2.len();
    // The likelihood mode sits at θ = 0 for every n2 when φ = x̄2.
    let phi = st.xbar2();
    let theta_bar = st.xbar2() - phi;
    let r_bar = -st.log_lik_x2(phi, theta_bar) / n2 as f64;
    let h = DMatrix::from_element(1, 1, 1.0 / st.sigma2_sq);
    let lap = laplace_at_likelihood_mode(n2, r_bar, &h, st.log_prior_theta(theta_bar))?;
    Ok((lap - st.log_marginal_x2(phi)).exp_m1().abs())
}

/// Adaptive Gauss-Hermite and Laplace approximations of the mixture marginal.
pub fn c8_laplace_aghq(_budget: Budget) -> Result<CriterionReport> {
    let truth = MixtureTruth::default();
    let d = simulate_mixture::<f64>(&truth, 30, 200, 801)?;
    let (x1, x2) = (d.x1.values(), d.x2.values());
    let st = MixtureStats::from_slices(x1, &x2[..60], &truth);
    let mut aghq_err = 0.0f64;
    for phi in [0.0, 0.4, 1.5] {
        let f = |t: &DVector<f64>| st.log_lik_x2(phi, t[0]) + st.log_prior_theta(t[0]);
        let est = aghq_auto(f, &DVector::from_element(1, 0.0), 5)?;
        aghq_err = aghq_err.max((est - st.log_marginal_x2(phi)).exp_m1().abs());
    }
    let errs: Vec<f64> = [50, 100, 200]
        .iter()
        .map(|&n| laplace_rel_error(x1, &x2[..n], &truth))
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let halving = ratios.iter().all(|r| *r > 2.0 / 1.5 && *r < 2.0 * 1.5);
    let mut values = vec![aghq_err];
    values.extend(&errs);
    Ok(CriterionReport::new(
        8,
        "quadrature and Laplace marginals",
        aghq_err < 1e-6 && halving,
        format!("AGHQ(5) relative error {aghq_err:.2e} (< 1e-6); Laplace errors {errs:.3?}, ratios {ratios:.3?} (2 within factor 1.5)"),
        values,
    ))
}

/// Harmonic-mean and KL estimators on cases with known answers.
pub fn c9_estimator_identities(budget: Budget) -> Result<CriterionReport> {
    let (a, b) = (0.5, 2.0);
    let grid = SGrid::uniform_1d(SAxis::Eta, a, b, 41)?;
    let gp = build_grid_posterior(
        PosteriorKind::Pooled,
        grid,
        &SPrior::uniform_on(&SGrid::uniform_1d(SAxis::Eta, a, b, 41)?),
        |_, _| Ok::<_, String>(LatticeValue::exact(0.0)),
    )?;
    let hm_uniform = harmonic_mean(&gp, 0)?;
    let hm_gap = (hm_uniform - (b - a) / (b / a).ln()).abs();

    let n = 200;
    let x = simulate_conjugate_normal::<f64>(0.0, n, 901)
        .values()
        .to_vec();
    let y = simulate_conjugate_normal::<f64>(0.0, n, 902)
        .values()
        .to_vec();
    let stats = ConjStats::from_data(&x, 2.0, 1.0, 0.0)?;
    let nf = n as f64;
    // The inner predictive expectation is taken by quadrature: each `z` carries a weight,
    // the `m` weights sum to `m`, and the score sums weight times log density.
    let sample_z = |s: &[f64], m: usize, _: &mut Rng64| -> Vec<(f64, f64)> {
        let t = stats
            .posterior(nf * s[0])
            .expect("proper posterior on the candidate range")
            .univariate_t();
        let sd = t.scale2.sqrt();
        let rule = CompositeRule::new(t.loc - 60.0 * sd, t.loc + 60.0 * sd, m / 10, 10);
        let mut nodes: Vec<(f64, f64)> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&z, &w)| (z, w * t.ln_pdf(z).exp()))
            .collect();
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        nodes.iter_mut().for_each(|n| n.1 *= m as f64 / total);
        nodes
    };
    let log_pred_sum = |s: &[f64], z: &[(f64, f64)]| match stats.posterior(nf * s[0]) {
        Ok(p) => {
            let t = p.univariate_t();
            z.iter().map(|&(v, w)| w * t.ln_pdf(v)).sum()
        }
        Err(_) => f64::NEG_INFINITY,
    };

    let candidates = SGrid::uniform_1d(SAxis::Eta, 0.05, 4.0, 80)?;
    let kl_cfg = if full(budget) {
        KlConfig::standard(903)
    } else {
        KlConfig {
            t: 40,
            j_inner: 200,
            batches: 4,
            seed: 903,
        }
    };
    let atom = 0.73;
    let kl_atom = kl_estimator(
        &PointMass(vec![atom]),
        &candidates,
        &kl_cfg,
        sample_z,
        log_pred_sum,
    )?;
    let atom_gap = (kl_atom.s[0] - atom).abs();

    let prior = SPrior::uniform_on(&candidates);
    let post = build_grid_posterior(
        PosteriorKind::Product,
        candidates.clone(),
        &prior,
        |_, s| {
            exact(
                stats
                    .product_log_predictive(&y, nf * s[0])
                    .map_err(Into::into),
            )
        },
    )?;
    let hm = harmonic_mean(&post, 0)?;
    let kl = kl_estimator(&post, &candidates, &kl_cfg, sample_z, log_pred_sum)?;
    let rel = (kl.s[0] / hm - 1.0).abs();
    // Point masses are scored on a lattice, so the atom is recovered up to interpolation.
    let passed = hm_gap < 1e-6 && atom_gap < 1e-3 && rel < 0.05;
    Ok(CriterionReport::new(
        9,
        "estimator identities",
        passed,
        format!(
            "uniform harmonic mean gap {hm_gap:.2e} (< 1e-6); KL on atom {atom}: {:.4} (within 1e-3); \
             conjugate n=J=200: KL {:.4} vs harmonic mean {hm:.4}, relative gap {rel:.4} (< 0.05); posterior mean {:.4} sd {:.4}",
            kl_atom.s[0], kl.s[0], post.integrate(|s| s[0]), crate::diagnostics::posterior_sd(&post, 0)
        ),
        vec![hm_uniform, kl_atom.s[0], kl.s[0], hm],
    ))
}

/// SSM calibration losses keep increasing at large learning rates.
pub fn c10_large_eta_losses(budget: Budget) -> Result<CriterionReport> {
    let truth = SsmTruth::default();
    let (datasets, points) = if full(budget) { (10, 30) } else { (2, 6) };
    let etas: Vec<f64> = (0..points)
        .map(|i| (20f64.ln() + (1000f64 / 20.0).ln() * i as f64 / (points - 1) as f64).exp())
        .collect();
    let mut increasing = 0;
    let mut values = Vec::new();
    for k in 0..datasets {
        let seed = derive_seed(1001, k as u64);
        let data = simulate_ssm::<f64>(&truth, 60, 6, seed)?;
        let (train, calib, _) = split_ssm_blocks(
            &data,
            &SplitSpec::train_calib(1.0 / 6.0, derive_seed(seed, 1))?,
        )?;
        let fit = SsmEta::new(
            &truth,
            train.ok_or_else(|| EvalError::Config("empty training split".into()))?,
        )?;
        let y = anchor_pairs(
            &calib.ok_or_else(|| EvalError::Config("empty calibration split".into()))?,
        );
        let mut ok = true;
        for kind in [PosteriorKind::Product, PosteriorKind::Pooled] {
            let loss: Vec<f64> = etas
                .iter()
                .map(|&e| Ok(-fit.log_predictive(kind, e, &y)?))
                .collect::<Result<_>>()?;
            ok &= loss.windows(2).all(|w| w[1] > w[0]);
            values.push(loss[points - 1] - loss[0]);
        }
        increasing += ok as usize;
    }
    Ok(CriterionReport::new(
        10,
        "SSM losses increase for large learning rates",
        increasing == datasets,
        format!("{increasing}/{datasets} datasets strictly increasing on {points} log-spaced points in [20, 1000]"),
        values,
    ))
}

pub const TITLES: [&str; 11] = [
    "finite-optimum probabilities in the conjugate model",
    "conjugate predictives by Monte Carlo and quadrature",
    "pooled posterior approaches the normalised limit density",
    "product posterior concentrates at rate 1/sqrt(J)",
    "eta-SMI and gamma-SMI agree for large samples",
    "nested MCMC agrees with the lattice posterior",
    "SSM risk-ratio direction under misspecification",
    "quadrature and Laplace marginals",
    "estimator identities",
    "SSM losses increase for large learning rates",
    "bit-identical replay",
];

/// Runs criterion `id` (1 to 10) at the given budget.
pub fn run_one(id: u8, budget: Budget) -> Result<CriterionReport> {
    match id {
        1 => c1_interior_probabilities(budget),
        2 => c2_conjugate_exactness(budget),
        3 => c3_pooled_limit(budget),
        4 => c4_product_concentration(budget),
        5 => c5_eta_gamma_convergence(budget),
        6 => c6_nested_vs_grid(budget),
        7 => c7_ssm_risk_direction(budget),
        8 => c8_laplace_aghq(budget),
        9 => c9_estimator_identities(budget),
        10 => c10_large_eta_losses(budget),
        _ => Err(EvalError::Config(format!("no criterion {id}"))),
    }
}

/// Like [`run_one`], with 11 for the replay check and errors turned into failing reports.
pub fn report(id: u8) -> CriterionReport {
    if id == 11 {
        return c11_replay();
    }
    run_one(id, Budget::Full).unwrap_or_else(|e| {
        let title = TITLES.get(id as usize - 1).copied().unwrap_or("unknown");
        CriterionReport::new(id, title, false, format!("error: {e}"), vec![])
    })
}

fn bits(reports: &[Result<CriterionReport>]) -> Vec<std::result::Result<Vec<u64>, String>> {
    reports
        .iter()
        .map(|r| match r {
            Ok(c) => Ok(c.values.iter().map(|v| v.to_bits()).collect()),
            Err(e) => Err(e.to_string()),
        })
        .collect()
}

/// Reruns criteria 1 to 10 at the reduced budget and compares all reported numbers bitwise.
pub fn c11_replay() -> CriterionReport {
    let run = || {
        bits(
            &(1..=10)
                .map(|id| run_one(id, Budget::Reduced))
                .collect::<Vec<_>>(),
        )
    };
    let first = run();
    let second = run();
    let differing: Vec<usize> = (0..first.len())
        .filter(|&i| first[i] != second[i])
        .map(|i| i + 1)
        .collect();
    let n_values: usize = first.iter().map(|r| r.as_ref().map_or(0, Vec::len)).sum();
    let failed: Vec<usize> = (0..first.len())
        .filter(|&i| first[i].is_err())
        .map(|i| i + 1)
        .collect();
    CriterionReport::new(
        11,
        TITLES[10],
        differing.is_empty() && failed.is_empty(),
        format!("{n_values} numbers over criteria 1-10 compared; differing {differing:?}; errored {failed:?}"),
        vec![n_values as f64],
    )
}

pub fn run_all() -> Vec<CriterionReport> {
    (1..=11).map(report).collect()
}
