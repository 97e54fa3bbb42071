//! High-precision optimal hyperparameters from large test sets.

use gbcal_core::numerics::golden_section_max;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalS {
    pub s: f64,
    pub loss: f64,
    /// The minimiser sits on an end of the search interval.
    pub boundary: bool,
}

/// Minimises `loss` over `[lo, hi]`: scan `n` equally spaced points, then refine
/// by golden-section search on the cells adjacent to the best one.
pub fn high_precision_optimal_s(
    lo: f64,
    hi: f64,
    n: usize,
    loss: impl Fn(f64) -> Result<f64>,
) -> Result<OptimalS> {
    if !(hi > lo) || n < 3 {
        return Err(EvalError::Config(format!(
            "need lo < hi and at least 3 scan points, got [{lo}, {hi}] n={n}"
        )));
    }
    let xs: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let mut vals = Vec::with_capacity(n);
    for &x in &xs {
        vals.push(loss(x)?);
    }
    let best = (0..n)
        .filter(|&i| vals[i].is_finite())
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .ok_or_else(|| EvalError::Numeric("loss is not finite anywhere on the scan".into()))?;
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(n - 1)];
    let (s, neg) = golden_section_max(|x| loss(x).map_or(f64::NEG_INFINITY, |v| -v), a, b, 1e-10);
    let tol = 1e-8 * (hi - lo);
    let boundary = (s - lo).abs() <= tol || (hi - s).abs() <= tol;
    Ok(OptimalS {
        s,
        loss: -neg,
        boundary,
    })
}
