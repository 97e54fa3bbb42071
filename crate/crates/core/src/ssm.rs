//! Gaussian algebra for AR(1) bridges between the two anchors of a block.
//!
//! Given the anchors, the interior states of a block depend only on that
//! block's endpoints, so all blocks share one bridge.

use crate::error::{CoreError, Result};
use crate::real::Real;

/// Symmetric tridiagonal Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Debug, Clone)]
pub struct TridiagCholesky<T: Real> {
    diag: Vec<T>,
    sub: Vec<T>,
}

impl<T: Real> TridiagCholesky<T> {
    /// Factors the matrix with main diagonal `diag` and off-diagonal `off`.
    pub fn new(diag: &[T], off: &[T]) -> Result<Self> {
        let n = diag.len();
        let mut l = vec![T::zero(); n];
        let mut s = vec![T::zero(); n.saturating_sub(1)];
        for i in 0..n {
            let mut d = diag[i];
            if i > 0 {
                s[i - 1] = off[i - 1] / l[i - 1];
                d -= s[i - 1] * s[i - 1];
            }
            if !(d > T::zero()) {
                return Err(CoreError::ParameterDomain(format!(
                    "tridiagonal matrix not positive definite at row {i}"
                )));
            }
            l[i] = d.sqrt();
        }
        Ok(Self { diag: l, sub: s })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let y = self.solve_lower(b);
        self.solve_upper(&y)
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = b.len();
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut v = b[i];
            if i > 0 {
                v -= self.sub[i - 1] * y[i - 1];
            }
            y[i] = v / self.diag[i];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[T]) -> Vec<T> {
        let n = y.len();
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut v = y[i];
            if i + 1 < n {
                v -= self.sub[i] * x[i + 1];
            }
            x[i] = v / self.diag[i];
        }
        x
    }

    pub fn log_det(&self) -> T {
        T::c(2.0) * self.diag.iter().map(|d| d.ln()).sum::<T>()
    }
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the column-eigenvector matrix (row-major).
pub fn symmetric_eigen<T: Real>(a: &[Vec<T>]) -> (Vec<T>, Vec<Vec<T>>) {
    let n = a.len();
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    let tiny = T::epsilon() * T::epsilon();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let scale: T = (0..n).map(|i| m[i][i] * m[i][i]).sum::<T>() + T::min_positive_value();
        if off <= tiny * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == T::zero() {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (T::c(2.0) * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i][i]).collect(), v)
}

/// Prior of the `d_x - 2` interior states of a block given its two anchors.
#[derive(Debug, Clone)]
pub struct ArBridge<T: Real> {
    k: usize,
    prec_diag: T,
    prec_off: T,
    anchor_coef: T,
    /// Conditional mean weights on the first and the last anchor.
    b_first: Vec<T>,
    b_last: Vec<T>,
    cov: Vec<Vec<T>>,
    eig_val: Vec<T>,
    eig_vec: Vec<Vec<T>>,
}

impl<T: Real> ArBridge<T> {
    pub fn new(nu: T, sigma: T, d_x: usize) -> Result<Self> {
        if !(nu.abs() < T::one()) || !(sigma > T::zero()) || d_x < 2 {
            return Err(CoreError::ParameterDomain(
                "AR(1) bridge needs |nu| < 1, sigma > 0, d_x >= 2".into(),
            ));
        }
        let k = d_x - 2;
        let s2 = sigma * sigma;
        let prec_diag = (T::one() + nu * nu) / s2;
        let prec_off = -nu / s2;
        let anchor_coef = nu / s2;
        let mut bridge = Self {
            k,
            prec_diag,
            prec_off,
            anchor_coef,
            b_first: vec![],
            b_last: vec![],
            cov: vec![],
            eig_val: vec![],
            eig_vec: vec![],
        };
        if k > 0 {
            let chol = bridge.prior_cholesky(T::zero())?;
            let unit = |i: usize| {
                (0..k)
                    .map(|j| if i == j { T::one() } else { T::zero() })
                    .collect::<Vec<_>>()
            };
            let cols: Vec<Vec<T>> = (0..k).map(|i| chol.solve(&unit(i))).collect();
            bridge.cov = (0..k)
                .map(|i| (0..k).map(|j| cols[j][i]).collect())
                .collect();
            bridge.b_first = cols[0].iter().map(|&v| v * anchor_coef).collect();
            bridge.b_last = cols[k - 1].iter().map(|&v| v * anchor_coef).collect();
            let (val, vec) = symmetric_eigen(&bridge.cov);
            bridge.eig_val = val;
            bridge.eig_vec = vec;
        }
        Ok(bridge)
    }

    pub fn n_interior(&self) -> usize {
        self.k
    }

    pub fn cov(&self) -> &[Vec<T>] {
        &self.cov
    }

    pub fn prec_diag(&self) -> T {
        self.prec_diag
    }

    pub fn prec_off(&self) -> T {
        self.prec_off
    }

    pub fn cond_mean(&self, anchors: [T; 2]) -> Vec<T> {
        (0..self.k)
            .map(|i| self.b_first[i] * anchors[0] + self.b_last[i] * anchors[1])
            .collect()
    }

    /// Linear term `h` of the prior log-density `-½θᵀQθ + hᵀθ`.
    pub fn linear_term(&self, anchors: [T; 2]) -> Vec<T> {
        let mut h = vec![T::zero(); self.k];
        if self.k > 0 {
            h[0] += self.anchor_coef * anchors[0];
            h[self.k - 1] += self.anchor_coef * anchors[1];
        }
        h
    }

    /// Cholesky factor of the prior precision plus `extra` on the diagonal.
    pub fn prior_cholesky(&self, extra: T) -> Result<TridiagCholesky<T>> {
        let diag = vec![self.prec_diag + extra; self.k];
        let off = vec![self.prec_off; self.k.saturating_sub(1)];
        TridiagCholesky::new(&diag, &off)
    }

    /// Terms of the prior log-density that involve interior state `j`, at value `v`.
    pub fn prior_local(&self, theta: &[T], anchors: [T; 2], j: usize, v: T) -> T {
        let mut nb = T::zero();
        if j > 0 {
            nb += theta[j - 1];
        }
        if j + 1 < self.k {
            nb += theta[j + 1];
        }
        let mut h = T::zero();
        if j == 0 {
            h += self.anchor_coef * anchors[0];
        }
        if j + 1 == self.k {
            h += self.anchor_coef * anchors[1];
        }
        -T::c(0.5) * self.prec_diag * v * v - v * self.prec_off * nb + h * v
    }

    /// Prior log-density of interior states (normalised).
    pub fn prior_logpdf(&self, theta: &[T], anchors: [T; 2]) -> T {
        if self.k == 0 {
            return T::zero();
        }
        let mu = self.cond_mean(anchors);
        let d: Vec<T> = theta.iter().zip(&mu).map(|(a, b)| *a - *b).collect();
        let mut quad = T::zero();
        for i in 0..self.k {
            let mut qd = self.prec_diag * d[i];
            if i > 0 {
                qd += self.prec_off * d[i - 1];
            }
            if i + 1 < self.k {
                qd += self.prec_off * d[i + 1];
            }
            quad += d[i] * qd;
        }
        let chol = self
            .prior_cholesky(T::zero())
            .expect("prior precision positive definite");
        -T::c(0.5)
            * (T::from_usize_lossy(self.k) * crate::real::ln_2pi::<T>() - chol.log_det() + quad)
    }

    /// `log ∫ Π_m N(x_m; θ_m, φ²)^η π(θ | anchors) dθ`, finite and continuous down to `η = 0`.
    pub fn log_tempered_marginal(&self, x_m: &[T], anchors: [T; 2], phi2: T, eta: T) -> T {
        if self.k == 0 {
            return T::zero();
        }
        let mu = self.cond_mean(anchors);
        let c = eta / phi2;
        let half = T::c(0.5);
        let mut log_det = T::zero();
        let mut quad = T::zero();
        for (kk, &lam) in self.eig_val.iter().enumerate() {
            let w: T = (0..self.k)
                .map(|i| self.eig_vec[i][kk] * (x_m[i] - mu[i]))
                .sum();
            let den = T::one() + c * lam;
            log_det += den.ln();
            quad += w * w / den;
        }
        -half * eta * T::from_usize_lossy(self.k) * (crate::real::ln_2pi::<T>() + phi2.ln())
            - half * log_det
            - half * c * quad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_interior_state_matches_bridge_formula() {
        let br = ArBridge::new(0.5f64, 0.7, 3).unwrap();
        let m = br.cond_mean([1.0, -2.0]);
        assert_abs_diff_eq!(m[0], 0.5 * (1.0 - 2.0) / 1.25, epsilon = 1e-14);
        assert_abs_diff_eq!(br.cov()[0][0], 0.49 / 1.25, epsilon = 1e-14);
    }

    #[test]
    fn bridge_covariance_matches_stationary_conditioning() {
        // Dense conditioning of the stationary AR(1) vector on its endpoints.
        let (nu, sig, d) = (0.5f64, 0.7f64, 6usize);
        let v = sig * sig / (1.0 - nu * nu);
        let cov = |i: usize, j: usize| v * nu.powi((i as i32 - j as i32).abs());
        let a = [0usize, d - 1];
        let caa = [
            [cov(0, 0), cov(0, d - 1)],
            [cov(d - 1, 0), cov(d - 1, d - 1)],
        ];
        let det = caa[0][0] * caa[1][1] - caa[0][1] * caa[1][0];
        let inv = [
            [caa[1][1] / det, -caa[0][1] / det],
            [-caa[1][0] / det, caa[0][0] / det],
        ];
        let br = ArBridge::new(nu, sig, d).unwrap();
        for (ii, i) in (1..d - 1).enumerate() {
            let cia = [cov(i, a[0]), cov(i, a[1])];
            let w = [
                cia[0] * inv[0][0] + cia[1] * inv[1][0],
                cia[0] * inv[0][1] + cia[1] * inv[1][1],
            ];
            let mean = br.cond_mean([1.0, 0.0]);
            assert_abs_diff_eq!(mean[ii], w[0], epsilon = 1e-12);
            for (jj, j) in (1..d - 1).enumerate() {
                let cja = [cov(j, a[0]), cov(j, a[1])];
                let c = cov(i, j) - (w[0] * cja[0] + w[1] * cja[1]);
                assert_abs_diff_eq!(br.cov()[ii][jj], c, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigen_reconstructs() {
        let a = vec![
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ];
        let (l, v) = symmetric_eigen(&a);
        for i in 0..3 {
            for j in 0..3 {
                let r: f64 = (0..3).map(|k| v[i][k] * l[k] * v[j][k]).sum();
                assert_abs_diff_eq!(r, a[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tempered_marginal_limits() {
        let br = ArBridge::new(0.5f64, 0.7, 6).unwrap();
        let x = [0.3, -0.2, 0.8, 0.1];
        assert_abs_diff_eq!(
            br.log_tempered_marginal(&x, [0.5, -0.5], 0.8, 0.0),
            0.0,
            epsilon = 1e-14
        );
        // At η = 1 it is the Gaussian marginal N(x; Bθ_A, Σ + φ² I), checked via the tridiagonal route.
        let phi2 = 0.8;
        let lhs = br.log_tempered_marginal(&x, [0.5, -0.5], phi2, 1.0);
        let mu = br.cond_mean([0.5, -0.5]);
        let cov: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| br.cov()[i][j] + if i == j { phi2 } else { 0.0 })
                    .collect()
            })
            .collect();
        let (l, v) = symmetric_eigen(&cov);
        let mut quad = 0.0;
        for k in 0..4 {
            let w: f64 = (0..4).map(|i| v[i][k] * (x[i] - mu[i])).sum();
            quad += w * w / l[k];
        }
        let rhs = -0.5
            * (4.0 * (2.0 * std::f64::consts::PI).ln()
                + l.iter().map(|t| t.ln()).sum::<f64>()
                + quad);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn local_terms_give_exact_ratios() {
        let br = ArBridge::new(0.5f64, 0.7, 6).unwrap();
        let th = [0.1, 0.4, -0.3, 0.2];
        let a = [0.5, 1.0];
        for j in 0..4 {
            let mut t2 = th;
            t2[j] = 0.9;
            let full = br.prior_logpdf(&t2, a) - br.prior_logpdf(&th, a);
            let local = br.prior_local(&th, a, j, 0.9) - br.prior_local(&th, a, j, th[j]);
            assert_abs_diff_eq!(full, local, epsilon = 1e-12);
        }
    }
}
