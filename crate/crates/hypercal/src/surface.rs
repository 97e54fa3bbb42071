//! Spline interpolation of lattice values and its maximisation.

use gbcal_core::numerics::{golden_section_max, GridSpline2, NaturalSpline};

use crate::error::{HypercalError, Result};
use crate::grid::SGrid;

#[derive(Clone, Debug)]
enum Interp {
    One(NaturalSpline<f64>),
    Two(GridSpline2<f64>),
}

/// Natural cubic spline through values on a lattice, with missing entries filled
/// from their row (or column) neighbours.
#[derive(Clone, Debug)]
pub struct Surface {
    grid: SGrid,
    interp: Interp,
}

impl Surface {
    /// `values[i]` belongs to lattice point `i`; `None` marks points to skip.
    pub fn new(grid: &SGrid, values: &[Option<f64>]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(HypercalError::Grid(format!(
                "{} values for {} lattice points",
                values.len(),
                grid.len()
            )));
        }
        let interp = match grid.dim() {
            1 => {
                let (x, y): (Vec<f64>, Vec<f64>) = grid.axes[0]
                    .values
                    .iter()
                    .zip(values)
                    .filter_map(|(&x, v)| v.map(|v| (x, v)))
                    .unzip();
                if x.len() < 2 {
                    return Err(HypercalError::AllMissing);
                }
                Interp::One(NaturalSpline::new(x, y)?)
            }
            _ => Interp::Two(fill_2d(grid, values)?),
        };
        Ok(Self {
            grid: grid.clone(),
            interp,
        })
    }

    pub fn grid(&self) -> &SGrid {
        &self.grid
    }

    pub fn eval(&self, s: &[f64]) -> f64 {
        match &self.interp {
            Interp::One(sp) => sp.eval(s[0]),
            Interp::Two(sp) => sp.eval(s[0], s[1]),
        }
    }

    /// Values on the tensor mesh of the per-axis node lists, axis 0 slowest.
    pub fn eval_mesh(&self, nodes: &[Vec<f64>]) -> Vec<f64> {
        match &self.interp {
            Interp::One(sp) => nodes[0].iter().map(|&t| sp.eval(t)).collect(),
            Interp::Two(sp) => sp
                .eval_mesh(&nodes[0], &nodes[1])
                .into_iter()
                .flatten()
                .collect(),
        }
    }

    /// Maximiser of the interpolant over the lattice bounds.
    ///
    /// In one dimension every cell is searched; in two, coordinate ascent runs from the
    /// best lattice points. Ties resolve toward smaller coordinates.
    pub fn argmax(&self) -> (Vec<f64>, f64) {
        match &self.interp {
            Interp::One(sp) => {
                let k = &self.grid.axes[0].values;
                let mut best = (k[0], sp.eval(k[0]));
                for w in k.windows(2) {
                    let (x, f) = golden_section_max(|t| sp.eval(t), w[0], w[1], 1e-12);
                    if f > best.1 {
                        best = (x, f);
                    }
                }
                (vec![best.0], best.1)
            }
            Interp::Two(_) => self.argmax_2d(),
        }
    }

    fn argmax_2d(&self) -> (Vec<f64>, f64) {
        let pts = self.grid.points();
        let vals: Vec<f64> = pts.iter().map(|p| self.eval(p)).collect();
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
        let mut best: Option<(Vec<f64>, f64)> = None;
        for &start in order.iter().take(3) {
            let mi = self.grid.multi_index(start);
            let brackets: Vec<(f64, f64)> = mi
                .iter()
                .zip(&self.grid.axes)
                .map(|(&k, a)| {
                    (
                        a.values[k.saturating_sub(1)],
                        a.values[(k + 1).min(a.len() - 1)],
                    )
                })
                .collect();
            let mut x = pts[start].clone();
            let mut fx = vals[start];
            for _ in 0..40 {
                let before = x.clone();
                for ax in 0..2 {
                    let (lo, hi) = brackets[ax];
                    let (v, f) = golden_section_max(
                        |t| {
                            let mut y = x.clone();
                            y[ax] = t;
                            self.eval(&y)
                        },
                        lo,
                        hi,
                        1e-12,
                    );
                    if f > fx {
                        x[ax] = v;
                        fx = f;
                    }
                }
                if before.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12) {
                    break;
                }
            }
            let better = match &best {
                None => true,
                Some((bx, bf)) => fx > *bf || (fx == *bf && x < *bx),
            };
            if better {
                best = Some((x, fx));
            }
        }
        best.expect("lattice has points")
    }
}

fn fill_2d(grid: &SGrid, values: &[Option<f64>]) -> Result<GridSpline2<f64>> {
    let (a0, a1) = (&grid.axes[0], &grid.axes[1]);
    let (n0, n1) = (a0.len(), a1.len());
    let at = |i: usize, j: usize| values[i * n1 + j];
    let mut z = vec![vec![0.0; n1]; n0];
    for i in 0..n0 {
        for j in 0..n1 {
            z[i][j] = match at(i, j) {
                Some(v) => v,
                None => {
                    let row: Vec<(f64, f64)> = (0..n1)
                        .filter_map(|k| at(i, k).map(|v| (a1.values[k], v)))
                        .collect();
                    let col: Vec<(f64, f64)> = (0..n0)
                        .filter_map(|k| at(k, j).map(|v| (a0.values[k], v)))
                        .collect();
                    let (pts, t) = if row.len() >= 2 {
                        (row, a1.values[j])
                    } else {
                        (col, a0.values[i])
                    };
                    if pts.len() < 2 {
                        return Err(HypercalError::Grid(format!(
                            "cannot fill missing lattice point ({i}, {j})"
                        )));
                    }
                    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                    NaturalSpline::new(x, y)?.eval(t)
                }
            };
        }
    }
    Ok(GridSpline2::new(a0.values.clone(), a1.values.clone(), &z)?)
}
