//! Interpolating natural cubic splines in one and two dimensions.

use crate::error::{CoreError, Result};
use crate::real::Real;

/// Natural cubic spline through `(x_i, y_i)`; linear beyond the end knots.
#[derive(Debug, Clone)]
pub struct NaturalSpline<T: Real> {
    x: Vec<T>,
    y: Vec<T>,
    m: Vec<T>,
}

impl<T: Real> NaturalSpline<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(CoreError::InvalidInput(format!(
                "spline needs matching non-empty knots, got {} x and {} y",
                x.len(),
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CoreError::InvalidInput(
                "spline knots must be strictly increasing".into(),
            ));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidInput(
                "spline values must be finite".into(),
            ));
        }
        let m = second_derivatives(&x, &y);
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> &[T] {
        &self.x
    }

    pub fn values(&self) -> &[T] {
        &self.y
    }

    fn cell(&self, t: T) -> usize {
        let n = self.x.len();
        if t <= self.x[0] {
            return 0;
        }
        if t >= self.x[n - 1] {
            return n - 2;
        }
        self.x
            .partition_point(|&k| k <= t)
            .saturating_sub(1)
            .min(n - 2)
    }

    pub fn eval(&self, t: T) -> T {
        let n = self.x.len();
        if n == 1 {
            return self.y[0];
        }
        if t < self.x[0] {
            return self.y[0] + self.deriv(self.x[0]) * (t - self.x[0]);
        }
        if t > self.x[n - 1] {
            return self.y[n - 1] + self.deriv(self.x[n - 1]) * (t - self.x[n - 1]);
        }
        let i = self.cell(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let six = T::c(6.0);
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / six
    }

    pub fn deriv(&self, t: T) -> T {
        let n = self.x.len();
        if n == 1 {
            return T::zero();
        }
        let tt = t.max(self.x[0]).min(self.x[n - 1]);
        let i = self.cell(tt);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - tt) / h;
        let b = (tt - self.x[i]) / h;
        let six = T::c(6.0);
        let three = T::c(3.0);
        (self.y[i + 1] - self.y[i]) / h - (three * a * a - T::one()) * h * self.m[i] / six
            + (three * b * b - T::one()) * h * self.m[i + 1] / six
    }
}

fn second_derivatives<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let mut m = vec![T::zero(); n];
    if n < 3 {
        return m;
    }
    let k = n - 2;
    let mut diag = vec![T::zero(); k];
    let mut upper = vec![T::zero(); k];
    let mut rhs = vec![T::zero(); k];
    let two = T::c(2.0);
    let six = T::c(6.0);
    for j in 0..k {
        let i = j + 1;
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[j] = two * (h0 + h1);
        upper[j] = h1;
        rhs[j] = six * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    // Thomas algorithm; the sub-diagonal entry of row j is h_{j} = x[j+1]-x[j].
    for j in 1..k {
        let lower = x[j + 1] - x[j];
        let w = lower / diag[j - 1];
        diag[j] -= w * upper[j - 1];
        rhs[j] = rhs[j] - w * rhs[j - 1];
    }
    let mut sol = vec![T::zero(); k];
    sol[k - 1] = rhs[k - 1] / diag[k - 1];
    for j in (0..k - 1).rev() {
        sol[j] = (rhs[j] - upper[j] * sol[j + 1]) / diag[j];
    }
    m[1..(k + 1)].copy_from_slice(&sol);
    m
}

/// Tensor-product natural spline on a rectangular lattice; `z[i][j]` sits at `(x0[i], x1[j])`.
#[derive(Debug, Clone)]
pub struct GridSpline2<T: Real> {
    x0: Vec<T>,
    rows: Vec<NaturalSpline<T>>,
}

impl<T: Real> GridSpline2<T> {
    pub fn new(x0: Vec<T>, x1: Vec<T>, z: &[Vec<T>]) -> Result<Self> {
        if z.len() != x0.len() {
            return Err(CoreError::InvalidInput(
                "lattice rows do not match axis 0".into(),
            ));
        }
        let rows = z
            .iter()
            .map(|row| NaturalSpline::new(x1.clone(), row.clone()))
            .collect::<Result<Vec<_>>>()?;
        // Validates axis 0.
        NaturalSpline::new(x0.clone(), vec![T::zero(); x0.len()])?;
        Ok(Self { x0, rows })
    }

    pub fn eval(&self, s0: T, s1: T) -> T {
        let col: Vec<T> = self.rows.iter().map(|r| r.eval(s1)).collect();
        NaturalSpline::new(self.x0.clone(), col)
            .map(|sp| sp.eval(s0))
            .unwrap_or(T::neg_infinity())
    }

    /// Values on the mesh `q0 × q1`, reusing the row interpolants.
    pub fn eval_mesh(&self, q0: &[T], q1: &[T]) -> Vec<Vec<T>> {
        let cols: Vec<Vec<T>> = self
            .rows
            .iter()
            .map(|r| q1.iter().map(|&t| r.eval(t)).collect())
            .collect();
        let mut out = vec![vec![T::zero(); q1.len()]; q0.len()];
        for (j, _) in q1.iter().enumerate() {
            let col: Vec<T> = cols.iter().map(|c| c[j]).collect();
            let sp =
                NaturalSpline::new(self.x0.clone(), col).expect("axis validated at construction");
            for (i, &t) in q0.iter().enumerate() {
                out[i][j] = sp.eval(t);
            }
        }
        out
    }
}
