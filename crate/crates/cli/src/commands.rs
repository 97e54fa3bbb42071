//! Study, oracle-check and risk-ratio subcommands.

use std::path::Path;

use gbcal_core::{derive_seed, simulate_mixture, simulate_ssm, HyperPoint};
use gbcal_eval::criteria::{self, Budget, CriterionReport};
use gbcal_eval::{
    anchor_pairs, mixture_split_study, risk_ratio_pooled, risk_ratio_product, ssm_replicate_study,
    AnchorPair, RiskRatioReport, SsmEta,
};
use gbcal_hypercal::PosteriorKind;
use gbcal_oracle::{MixtureStats, SmiKind};

use crate::config::{Config, Family, Model};
use crate::data::{load_mixture, load_ssm};
use crate::error::Result;

/// Replicate cap applied by `--fast`.
pub const FAST_REPLICATES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Conjugate,
    Mixture,
    LaplaceAghq,
    InteriorTable,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Conjugate => "conjugate",
            Suite::Mixture => "mixture",
            Suite::LaplaceAghq => "laplace_aghq",
            Suite::InteriorTable => "interior_table",
        }
    }
}

/// Runs the replicate study for `cfg.model`, writing one directory per setting under `dir`.
pub fn study(cfg: &Config, fast: bool, dir: &Path) -> Result<Vec<String>> {
    let mut written = Vec::new();
    match cfg.model {
        Model::Ssm => {
            for &level in &cfg.study.phi_m_levels {
                let mut c = cfg.study.ssm.clone();
                c.truth.phi_m_star = level;
                if fast {
                    c.replicates = c.replicates.min(FAST_REPLICATES);
                }
                log::info!(
                    "state-space study at phi_m* = {level}: {} replicates",
                    c.replicates
                );
                let s = ssm_replicate_study(&c)?;
                let failed = s.records.iter().filter(|r| r.error.is_some()).count();
                if failed > 0 {
                    log::warn!("{failed} of {} replicates failed", s.records.len());
                }
                let sub = dir.join(format!("ssm_phi_m_{level}"));
                s.write(&sub)?;
                written.push(sub.display().to_string());
            }
        }
        Model::Mixture => {
            let mut c = cfg.study.mixture.clone();
            if fast {
                c.replicates = c.replicates.min(FAST_REPLICATES);
            }
            log::info!(
                "mixture split study: {} replicates x {} splits",
                c.replicates,
                c.split_fractions.len()
            );
            let s = mixture_split_study(&c)?;
            let sub = dir.join("mixture");
            s.write(&sub)?;
            written.push(sub.display().to_string());
        }
    }
    Ok(written)
}

/// Closed-form and quadrature checks; `fast` runs the smaller budgets.
pub fn oracle_check(suite: Suite, fast: bool) -> Result<Vec<CriterionReport>> {
    let budget = if fast { Budget::Reduced } else { Budget::Full };
    Ok(match suite {
        Suite::Conjugate => vec![criteria::c2_conjugate_exactness(budget)?],
        Suite::Mixture => vec![
            criteria::c3_pooled_limit(budget)?,
            criteria::c5_eta_gamma_convergence(budget)?,
        ],
        Suite::LaplaceAghq => vec![criteria::c8_laplace_aghq(budget)?],
        Suite::InteriorTable => vec![criteria::interior_table(
            if fast { 10_000 } else { 100_000 },
            &[0, 1, 2, 3, 4],
        )?],
    })
}

fn point(family: Family, s: f64) -> HyperPoint {
    match family {
        Family::Gamma => HyperPoint::gamma(s),
        _ => HyperPoint::eta(s),
    }
}

fn coord(h: &HyperPoint) -> f64 {
    h.gamma.unwrap_or(h.eta)
}

/// `R(s1, s2)` on fresh test sets, with the update refitted on training and calibration data.
pub fn risk_ratio(cfg: &Config) -> Result<RiskRatioReport> {
    let r = &cfg.risk_ratio;
    let family = cfg.calibrate.family;
    let (s1, s2) = (point(family, r.s1), point(family, r.s2));
    let dir = cfg.data_dir();
    let test_seed = |t: usize| derive_seed(cfg.seed, 100 + t as u64);
    match cfg.model {
        Model::Mixture => {
            let truth = cfg.mixture.truth;
            let data = load_mixture(dir)?;
            let x1: Vec<f64> = data.x1.iter().chain(&data.y).copied().collect();
            let refit = MixtureStats::from_slices(&x1, &data.x2, &truth);
            let smi = if family == Family::Gamma {
                SmiKind::Gamma
            } else {
                SmiKind::Eta
            };
            let sets: Vec<Vec<f64>> = (0..r.n_test_sets)
                .map(|t| {
                    Ok(
                        simulate_mixture::<f64>(&truth, r.test_size, 0, test_seed(t))?
                            .x1
                            .values()
                            .to_vec(),
                    )
                })
                .collect::<Result<_>>()?;
            Ok(match r.kind {
                PosteriorKind::Product => risk_ratio_product(s1, s2, &sets, |s, z: &f64| {
                    Ok(refit.product_log_predictive(smi, coord(s), std::slice::from_ref(z))?)
                })?,
                PosteriorKind::Pooled => risk_ratio_pooled(s1, s2, &sets, |s, set: &[f64]| {
                    Ok(refit.pooled_log_predictive(smi, coord(s), set)?)
                })?,
            })
        }
        Model::Ssm => {
            let truth = cfg.ssm.truth;
            let (train, calib) = load_ssm(dir)?;
            let refit = SsmEta::new(&truth, train)?.pooled_with(&anchor_pairs(&calib));
            let sets: Vec<Vec<AnchorPair>> = (0..r.n_test_sets)
                .map(|t| {
                    Ok(anchor_pairs(&simulate_ssm::<f64>(
                        &truth,
                        r.test_size,
                        cfg.ssm.d_x,
                        test_seed(t),
                    )?))
                })
                .collect::<Result<_>>()?;
            Ok(match r.kind {
                PosteriorKind::Product => {
                    risk_ratio_product(s1, s2, &sets, |s, z: &AnchorPair| {
                        refit.log_product(s.eta, std::slice::from_ref(z))
                    })?
                }
                PosteriorKind::Pooled => {
                    risk_ratio_pooled(s1, s2, &sets, |s, set: &[AnchorPair]| {
                        refit.log_pooled(s.eta, set)
                    })?
                }
            })
        }
    }
}
