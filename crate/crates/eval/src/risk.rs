//! Expected risk ratios between two belief updates on held-out test sets.

use gbcal_core::numerics::{mean, variance};
use gbcal_core::HyperPoint;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioKind {
    /// Ratio of products of pointwise predictives over each test set.
    Product,
    /// Ratio of joint predictives of each test set.
    Pooled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskRatioReport {
    pub s1: HyperPoint,
    pub s2: HyperPoint,
    pub kind: RatioKind,
    /// Mean over retained test sets of the exponentiated log-ratios.
    pub value: f64,
    pub n_test_sets: usize,
    pub log_ratios: Vec<f64>,
    /// Indices of test sets dropped for a zero or non-finite predictive.
    pub dropped: Vec<usize>,
    pub mc_se: f64,
}

impl RiskRatioReport {
    /// Builds a report from per-set log predictives of the two updates.
    pub fn from_log_predictives(
        s1: HyperPoint,
        s2: HyperPoint,
        kind: RatioKind,
        log_p1: &[f64],
        log_p2: &[f64],
    ) -> Result<Self> {
        if log_p1.len() != log_p2.len() || log_p1.is_empty() {
            return Err(EvalError::Config(
                "risk ratio needs matching non-empty test sets".into(),
            ));
        }
        let mut log_ratios = Vec::with_capacity(log_p1.len());
        let mut dropped = Vec::new();
        for (k, (&a, &b)) in log_p1.iter().zip(log_p2).enumerate() {
            let d = if s1 == s2 { 0.0 } else { a - b };
            if a.is_finite() && b.is_finite() && d.is_finite() {
                log_ratios.push(d);
            } else {
                log::warn!("dropping test set {k}: log predictives {a} and {b}");
                dropped.push(k);
            }
        }
        if log_ratios.is_empty() {
            return Err(EvalError::Numeric("every test set was dropped".into()));
        }
        let ratios: Vec<f64> = log_ratios.iter().map(|v| v.exp()).collect();
        let value = mean(&ratios);
        let mc_se = if ratios.len() > 1 {
            (variance(&ratios) / ratios.len() as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            s1,
            s2,
            kind,
            value,
            n_test_sets: log_ratios.len(),
            log_ratios,
            dropped,
            mc_se,
        })
    }

    pub fn median_log_ratio(&self) -> f64 {
        gbcal_core::numerics::median(&self.log_ratios)
    }
}

/// `R_J(s1, s2)`: `pointwise(s, z)` returns `log p_s(z | x, y)` for one test point.
pub fn risk_ratio_product<Z>(
    s1: HyperPoint,
    s2: HyperPoint,
    test_sets: &[Vec<Z>],
    pointwise: impl Fn(&HyperPoint, &Z) -> Result<f64>,
) -> Result<RiskRatioReport> {
    let set_log = |s: &HyperPoint, set: &[Z]| -> Result<f64> {
        let mut acc = 0.0;
        for z in set {
            acc += pointwise(s, z)?;
        }
        Ok(acc)
    };
    let mut l1 = Vec::with_capacity(test_sets.len());
    let mut l2 = Vec::with_capacity(test_sets.len());
    for set in test_sets {
        l1.push(set_log(&s1, set)?);
        l2.push(if s1 == s2 {
            l1[l1.len() - 1]
        } else {
            set_log(&s2, set)?
        });
    }
    RiskRatioReport::from_log_predictives(s1, s2, RatioKind::Product, &l1, &l2)
}

/// `R_1(s1, s2)`: `joint(s, set)` returns `log p_s(z_1..z_J | x, y)`.
pub fn risk_ratio_pooled<Z>(
    s1: HyperPoint,
    s2: HyperPoint,
    test_sets: &[Vec<Z>],
    joint: impl Fn(&HyperPoint, &[Z]) -> Result<f64>,
) -> Result<RiskRatioReport> {
    let mut l1 = Vec::with_capacity(test_sets.len());
    let mut l2 = Vec::with_capacity(test_sets.len());
    for set in test_sets {
        l1.push(joint(&s1, set)?);
        l2.push(if s1 == s2 {
            l1[l1.len() - 1]
        } else {
            joint(&s2, set)?
        });
    }
    RiskRatioReport::from_log_predictives(s1, s2, RatioKind::Pooled, &l1, &l2)
}
