//! Rectangular lattices over one or two hyperparameters.

use gbcal_core::{HyperPoint, SAxis};
use serde::{Deserialize, Serialize};

use crate::error::{HypercalError, Result};

pub const DEFAULT_POINTS: usize = 41;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: SAxis,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: SAxis, values: Vec<f64>) -> Result<Self> {
        let a = Self { name, values };
        a.validate()?;
        Ok(a)
    }

    /// `n` equally spaced values on `[lo, hi]`.
    pub fn uniform(name: SAxis, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(HypercalError::Grid(format!(
                "need n >= 2 and lo < hi, got n = {n} on [{lo}, {hi}]"
            )));
        }
        let values = (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect();
        Self::new(name, values)
    }

    pub fn lo(&self) -> f64 {
        self.values[0]
    }

    pub fn hi(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let v = &self.values;
        if v.len() < 2 {
            return Err(HypercalError::Grid(format!(
                "axis {} needs at least two values",
                self.name.name()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HypercalError::Grid(format!(
                "axis {} must be finite and strictly increasing",
                self.name.name()
            )));
        }
        let ok = match self.name {
            SAxis::Eta => v[0] >= 0.0,
            SAxis::Gamma => v[0] >= 0.0 && self.hi() <= 1.0,
            SAxis::B => v[0] >= 0.0,
            SAxis::Beta => v[0] > 0.0,
        };
        if !ok {
            return Err(HypercalError::Grid(format!(
                "axis {} range [{}, {}] leaves its domain",
                self.name.name(),
                v[0],
                self.hi()
            )));
        }
        Ok(())
    }

    /// Inserts the midpoint of every cell.
    pub fn refined(&self) -> Self {
        let mut values = Vec::with_capacity(2 * self.values.len() - 1);
        for w in self.values.windows(2) {
            values.push(w[0]);
            values.push(0.5 * (w[0] + w[1]));
        }
        values.push(self.hi());
        Self {
            name: self.name,
            values,
        }
    }
}

/// Lattice points are ordered with the first axis slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SGrid {
    pub axes: Vec<Axis>,
}

impl SGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(HypercalError::Grid(format!(
                "grids cover one or two axes, got {}",
                axes.len()
            )));
        }
        if axes.len() == 2 && axes[0].name == axes[1].name {
            return Err(HypercalError::Grid("the two axes must differ".into()));
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(Self { axes })
    }

    pub fn one(axis: Axis) -> Self {
        Self { axes: vec![axis] }
    }

    pub fn uniform_1d(name: SAxis, lo: f64, hi: f64, n: usize) -> Result<Self> {
        Ok(Self::one(Axis::uniform(name, lo, hi, n)?))
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> Vec<SAxis> {
        self.axes.iter().map(|a| a.name).collect()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.axes.iter().map(|a| (a.lo(), a.hi())).collect()
    }

    pub fn multi_index(&self, i: usize) -> Vec<usize> {
        match self.axes.len() {
            1 => vec![i],
            _ => {
                let n1 = self.axes[1].len();
                vec![i / n1, i % n1]
            }
        }
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.multi_index(i)
            .iter()
            .zip(&self.axes)
            .map(|(&k, a)| a.values[k])
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn hyper_point(&self, s: &[f64], base: HyperPoint) -> HyperPoint {
        HyperPoint::from_axes(base, &self.names(), s)
    }

    pub fn contains(&self, s: &[f64]) -> bool {
        s.len() == self.dim()
            && s.iter()
                .zip(&self.axes)
                .all(|(&v, a)| v >= a.lo() && v <= a.hi())
    }

    pub fn refined(&self) -> Self {
        Self {
            axes: self.axes.iter().map(Axis::refined).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_order_and_refinement() {
        let g = SGrid::new(vec![
            Axis::uniform(SAxis::Eta, 0.0, 1.0, 3).unwrap(),
            Axis::uniform(SAxis::B, 0.5, 2.0, 4).unwrap(),
        ])
        .unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g.point(5), vec![0.5, 1.0]);
        let r = g.refined();
        assert_eq!(r.axes[0].values, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(r.len(), 5 * 7);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(Axis::new(SAxis::Eta, vec![0.0, 0.0, 1.0]).is_err());
        assert!(Axis::new(SAxis::Eta, vec![-0.1, 1.0]).is_err());
        assert!(Axis::new(SAxis::Gamma, vec![0.0, 1.2]).is_err());
        assert!(Axis::new(SAxis::Beta, vec![0.0, 1.0]).is_err());
        let a = Axis::uniform(SAxis::Eta, 0.0, 1.0, 3).unwrap();
        assert!(SGrid::new(vec![a.clone(), a]).is_err());
    }
}
