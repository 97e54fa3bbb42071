//! Dataset containers.

use crate::error::{CoreError, Result};
use crate::real::Real;

/// Ordered observation vectors of a common dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleDataset<T: Real> {
    d_x: usize,
    values: Vec<T>,
}

impl<T: Real> SimpleDataset<T> {
    pub fn new(d_x: usize, values: Vec<T>) -> Result<Self> {
        if d_x == 0 {
            return Err(CoreError::InvalidInput(
                "point dimension must be positive".into(),
            ));
        }
        if values.len() % d_x != 0 {
            return Err(CoreError::InvalidInput(format!(
                "{} values do not form points of dimension {d_x}",
                values.len()
            )));
        }
        Ok(Self { d_x, values })
    }

    /// Scalar observations.
    pub fn scalar(values: Vec<T>) -> Self {
        Self { d_x: 1, values }
    }

    pub fn empty(d_x: usize) -> Self {
        Self {
            d_x: d_x.max(1),
            values: Vec::new(),
        }
    }

    pub fn from_points(d_x: usize, points: &[Vec<T>]) -> Result<Self> {
        if points.iter().any(|p| p.len() != d_x) {
            return Err(CoreError::InvalidInput(format!(
                "all points must have dimension {d_x}"
            )));
        }
        Self::new(d_x, points.concat())
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.d_x
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.values[i * self.d_x..(i + 1) * self.d_x]
    }

    pub fn points(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks_exact(self.d_x)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut v = Vec::with_capacity(idx.len() * self.d_x);
        for &i in idx {
            v.extend_from_slice(self.point(i));
        }
        Self {
            d_x: self.d_x,
            values: v,
        }
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        if other.d_x != self.d_x {
            return Err(CoreError::InvalidInput(
                "cannot join datasets of different dimension".into(),
            ));
        }
        let mut v = self.values.clone();
        v.extend_from_slice(&other.values);
        Ok(Self {
            d_x: self.d_x,
            values: v,
        })
    }

    pub fn first(&self, n: usize) -> Self {
        Self {
            d_x: self.d_x,
            values: self.values[..n.min(self.n()) * self.d_x].to_vec(),
        }
    }

    /// Sum of the first component over points.
    pub fn sum(&self) -> T {
        self.points().map(|p| p[0]).sum()
    }

    pub fn mean(&self) -> T {
        self.sum() / T::from_usize_lossy(self.n().max(1))
    }
}

/// Two-module data: `x1` from the trusted module, `x2` from the suspect one.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularDataset<T: Real> {
    pub x1: SimpleDataset<T>,
    pub x2: SimpleDataset<T>,
}

impl<T: Real> ModularDataset<T> {
    pub fn new(x1: SimpleDataset<T>, x2: SimpleDataset<T>) -> Self {
        Self { x1, x2 }
    }

    /// `n1 / n2`.
    pub fn ratio_alpha(&self) -> Result<f64> {
        if self.x2.n() == 0 {
            return Err(CoreError::InvalidInput("ratio n1/n2 needs n2 > 0".into()));
        }
        Ok(self.x1.n() as f64 / self.x2.n() as f64)
    }
}

/// Blocked state-space data with observed latent values at the first and last
/// position of every block.
#[derive(Debug, Clone, PartialEq)]
pub struct SsmDataset<T: Real> {
    n_blocks: usize,
    d_x: usize,
    /// Emissions, row-major over `(block, position)`.
    x_all: Vec<T>,
    /// Latent values at anchors, two per block.
    theta_anchor: Vec<T>,
    /// Full latent path when known (simulation output).
    theta_all: Option<Vec<T>>,
}

impl<T: Real> SsmDataset<T> {
    pub fn new(
        n_blocks: usize,
        d_x: usize,
        x_all: Vec<T>,
        theta_anchor: Vec<T>,
        theta_all: Option<Vec<T>>,
    ) -> Result<Self> {
        if n_blocks == 0 || d_x < 2 {
            return Err(CoreError::InvalidInput(format!(
                "state-space data needs at least one block and d_x >= 2 (got {n_blocks}, {d_x})"
            )));
        }
        if x_all.len() != n_blocks * d_x || theta_anchor.len() != 2 * n_blocks {
            return Err(CoreError::InvalidInput(
                "state-space arrays have inconsistent sizes".into(),
            ));
        }
        if let Some(t) = &theta_all {
            if t.len() != n_blocks * d_x {
                return Err(CoreError::InvalidInput(
                    "latent path has the wrong length".into(),
                ));
            }
        }
        Ok(Self {
            n_blocks,
            d_x,
            x_all,
            theta_anchor,
            theta_all,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn x_all(&self) -> &[T] {
        &self.x_all
    }

    pub fn theta_anchor(&self) -> &[T] {
        &self.theta_anchor
    }

    pub fn theta_all(&self) -> Option<&[T]> {
        self.theta_all.as_deref()
    }

    /// Zero-based `(block, position)` pairs of the anchor set.
    pub fn anchor_index(&self) -> Vec<(usize, usize)> {
        (0..self.n_blocks)
            .flat_map(|i| [(i, 0), (i, self.d_x - 1)])
            .collect()
    }

    pub fn missing_index(&self) -> Vec<(usize, usize)> {
        (0..self.n_blocks)
            .flat_map(|i| (1..self.d_x - 1).map(move |j| (i, j)))
            .collect()
    }

    pub fn n_missing_per_block(&self) -> usize {
        self.d_x - 2
    }

    pub fn block_x(&self, i: usize) -> &[T] {
        &self.x_all[i * self.d_x..(i + 1) * self.d_x]
    }

    /// Emissions at the interior (missing-state) positions of block `i`.
    pub fn block_missing_x(&self, i: usize) -> &[T] {
        &self.x_all[i * self.d_x + 1..(i + 1) * self.d_x - 1]
    }

    /// `(x_first, x_last)` emissions of block `i`.
    pub fn block_anchor_x(&self, i: usize) -> [T; 2] {
        let b = self.block_x(i);
        [b[0], b[self.d_x - 1]]
    }

    pub fn block_anchor_theta(&self, i: usize) -> [T; 2] {
        [self.theta_anchor[2 * i], self.theta_anchor[2 * i + 1]]
    }

    /// Anchor observations as points `(y_first, y_last, θ_first, θ_last)`, one per block.
    pub fn anchor_pairs(&self) -> SimpleDataset<T> {
        let mut v = Vec::with_capacity(4 * self.n_blocks);
        for i in 0..self.n_blocks {
            let x = self.block_anchor_x(i);
            let t = self.block_anchor_theta(i);
            v.extend_from_slice(&[x[0], x[1], t[0], t[1]]);
        }
        SimpleDataset { d_x: 4, values: v }
    }

    pub fn subset_blocks(&self, idx: &[usize]) -> Self {
        let mut x = Vec::with_capacity(idx.len() * self.d_x);
        let mut ta = Vec::with_capacity(idx.len() * 2);
        let mut tall = self
            .theta_all
            .as_ref()
            .map(|_| Vec::with_capacity(idx.len() * self.d_x));
        for &i in idx {
            x.extend_from_slice(self.block_x(i));
            ta.extend_from_slice(&self.block_anchor_theta(i));
            if let (Some(out), Some(src)) = (tall.as_mut(), self.theta_all.as_ref()) {
                out.extend_from_slice(&src[i * self.d_x..(i + 1) * self.d_x]);
            }
        }
        Self {
            n_blocks: idx.len(),
            d_x: self.d_x,
            x_all: x,
            theta_anchor: ta,
            theta_all: tall,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_dataset_shape() {
        let d = SimpleDataset::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d.n(), 2);
        assert_eq!(d.point(1), &[3.0, 4.0]);
        assert!(SimpleDataset::new(2, vec![1.0f64]).is_err());
        assert_eq!(d.subset(&[1]).values(), &[3.0, 4.0]);
    }

    #[test]
    fn ssm_index_sets_partition() {
        let d = SsmDataset::new(3, 6, vec![0.0f64; 18], vec![0.0; 6], None).unwrap();
        let a = d.anchor_index();
        let m = d.missing_index();
        assert_eq!(a.len(), 6);
        assert_eq!(a.len() + m.len(), 18);
        assert!(a.iter().all(|p| !m.contains(p)));
        assert!(a.iter().all(|&(_, j)| j == 0 || j == 5));
    }

    #[test]
    fn alpha_needs_module_two() {
        let m = ModularDataset::new(SimpleDataset::scalar(vec![1.0f64]), SimpleDataset::empty(1));
        assert!(m.ratio_alpha().is_err());
    }
}
