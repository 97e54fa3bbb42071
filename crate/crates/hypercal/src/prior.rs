//! Priors on hyperparameters.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HypercalError, Result};
use crate::grid::SGrid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AxisPrior {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Exponential with the given rate; `Exp(1/3)` has mean 3.
    Exponential {
        rate: f64,
    },
    /// Flat on `[0, ∞)`; the lattice bounds act only as a numerical truncation.
    ImproperFlat,
}

impl AxisPrior {
    pub fn log_density(&self, v: f64) -> f64 {
        match *self {
            AxisPrior::Uniform { lo, hi } => {
                if v >= lo && v <= hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            AxisPrior::Exponential { rate } => {
                if v >= 0.0 {
                    rate.ln() - rate * v
                } else {
                    f64::NEG_INFINITY
                }
            }
            AxisPrior::ImproperFlat => {
                if v >= 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            AxisPrior::Uniform { lo, hi } if !(hi > lo && lo.is_finite() && hi.is_finite()) => Err(
                HypercalError::Prior(format!("uniform prior needs lo < hi, got [{lo}, {hi}]")),
            ),
            AxisPrior::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => Err(
                HypercalError::Prior(format!("exponential rate must be positive, got {rate}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Accepts `uniform(lo,hi)`, `exp(rate)` with `rate` a number or `p/q`, and `improper`.
impl FromStr for AxisPrior {
    type Err = HypercalError;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_lowercase();
        let args = |name: &str| -> Option<Vec<f64>> {
            let inner = t.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?;
            inner
                .split(',')
                .map(parse_number)
                .collect::<Option<Vec<_>>>()
        };
        let p = if t == "improper" || t == "flat" {
            AxisPrior::ImproperFlat
        } else if let Some(v) = args("uniform") {
            match v.as_slice() {
                [lo, hi] => AxisPrior::Uniform { lo: *lo, hi: *hi },
                [hi] => AxisPrior::Uniform { lo: 0.0, hi: *hi },
                _ => return Err(HypercalError::Prior(format!("cannot parse `{s}`"))),
            }
        } else if let Some(v) = args("exp") {
            match v.as_slice() {
                [rate] => AxisPrior::Exponential { rate: *rate },
                _ => return Err(HypercalError::Prior(format!("cannot parse `{s}`"))),
            }
        } else {
            return Err(HypercalError::Prior(format!("unknown prior `{s}`")));
        };
        p.validate()?;
        Ok(p)
    }
}

fn parse_number(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => Some(a.parse::<f64>().ok()? / b.parse::<f64>().ok()?),
        None => s.parse().ok(),
    }
}

/// Independent priors, one per grid axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SPrior {
    pub axes: Vec<AxisPrior>,
}

impl SPrior {
    pub fn new(axes: Vec<AxisPrior>) -> Result<Self> {
        for a in &axes {
            a.validate()?;
        }
        Ok(Self { axes })
    }

    /// Uniform over the bounds of `grid`.
    pub fn uniform_on(grid: &SGrid) -> Self {
        Self {
            axes: grid
                .bounds()
                .into_iter()
                .map(|(lo, hi)| AxisPrior::Uniform { lo, hi })
                .collect(),
        }
    }

    pub fn log_density(&self, s: &[f64]) -> f64 {
        self.axes
            .iter()
            .zip(s)
            .map(|(p, &v)| p.log_density(v))
            .sum()
    }

    pub fn check_grid(&self, grid: &SGrid) -> Result<()> {
        if self.axes.len() != grid.dim() {
            return Err(HypercalError::Prior(format!(
                "{} prior axes for a {}-d grid",
                self.axes.len(),
                grid.dim()
            )));
        }
        for (i, p) in grid.points().iter().enumerate() {
            if !self.log_density(p).is_finite() {
                return Err(HypercalError::Prior(format!(
                    "prior vanishes at lattice point {i} ({p:?})"
                )));
            }
        }
        Ok(())
    }
}
