//! Laplace and adaptive Gauss-Hermite approximations of
//! `log ∫ exp(log_integrand(θ)) dθ` over `R^d`.

use std::f64::consts::PI;

use gbcal_core::numerics::gauss_hermite;
use nalgebra::{DMatrix, DVector};

use crate::error::{OracleError, Result};

/// Laplace approximation built at the likelihood mode `θ̄`:
/// `log π(θ̄) + (d/2) log 2π - n r(θ̄) - (d/2) log n - ½ log |∇²r(θ̄)|`,
/// where `r` is the average negative log-likelihood. The relative error is `O(1/n)`.
pub fn laplace_at_likelihood_mode(
    n: usize,
    r_at_mode: f64,
    hessian_r: &DMatrix<f64>,
    log_prior_at_mode: f64,
) -> Result<f64> {
    let d = hessian_r.nrows() as f64;
    let nf = n as f64;
    let log_det = log_det_pd(hessian_r)?;
    Ok(log_prior_at_mode + 0.5 * d * (2.0 * PI).ln()
        - nf * r_at_mode
        - 0.5 * d * nf.ln()
        - 0.5 * log_det)
}

/// Adaptive Gauss-Hermite quadrature with `k` nodes per axis, centred at `mode`
/// with the negative Hessian `neg_hessian` of the log integrand there.
/// `k = 1` reduces to the Laplace approximation at the integrand mode.
pub fn aghq(
    log_integrand: impl Fn(&DVector<f64>) -> f64,
    mode: &DVector<f64>,
    neg_hessian: &DMatrix<f64>,
    k: usize,
) -> Result<f64> {
    let d = mode.len();
    let chol = neg_hessian
        .clone()
        .cholesky()
        .ok_or_else(|| OracleError::NotPositiveDefinite {
            eigenvalues: eigenvalues(neg_hessian),
        })?;
    // θ = mode + √2 L⁻ᵀ z, Jacobian 2^{d/2} |L|⁻¹.
    let l_inv_t =
        chol.l()
            .transpose()
            .try_inverse()
            .ok_or_else(|| OracleError::NotPositiveDefinite {
                eigenvalues: eigenvalues(neg_hessian),
            })?;
    let log_jac = 0.5 * d as f64 * 2f64.ln() - 0.5 * log_det_pd(neg_hessian)?;
    let (z, w) = gauss_hermite(k);
    let total = k.checked_pow(d as u32).expect("quadrature grid too large");
    let mut terms = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let zv = DVector::from_iterator(d, idx.iter().map(|&i| z[i]));
        let log_w: f64 = idx.iter().map(|&i| w[i].ln() + z[i] * z[i]).sum();
        let theta = mode + std::f64::consts::SQRT_2 * (&l_inv_t * &zv);
        terms.push(log_w + log_integrand(&theta));
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < k {
                break;
            }
            *slot = 0;
        }
    }
    Ok(log_jac + gbcal_core::numerics::log_sum_exp(&terms))
}

/// [`aghq`] with the mode and Hessian found numerically from `start`.
pub fn aghq_auto(
    log_integrand: impl Fn(&DVector<f64>) -> f64,
    start: &DVector<f64>,
    k: usize,
) -> Result<f64> {
    let neg = |t: &DVector<f64>| -log_integrand(t);
    let mode = newton_minimize(&neg, start)?;
    let h = numerical_hessian(&neg, &mode);
    aghq(&log_integrand, &mode, &h, k)
}

/// Newton minimisation with finite-difference derivatives and step halving.
pub fn newton_minimize(
    f: impl Fn(&DVector<f64>) -> f64,
    start: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut x = start.clone();
    let mut fx = f(&x);
    for _ in 0..200 {
        let g = numerical_gradient(&f, &x);
        let h = numerical_hessian(&f, &x);
        let step = match h.clone().cholesky() {
            Some(c) => c.solve(&g),
            None => g.clone() * 1e-2,
        };
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand = &x - t * &step;
            let fc = f(&cand);
            if fc.is_finite() && fc <= fx {
                let done = (fx - fc).abs() < 1e-14 * (1.0 + fx.abs()) && step.norm() * t < 1e-9;
                x = cand;
                fx = fc;
                moved = true;
                if done {
                    return Ok(x);
                }
                break;
            }
            t *= 0.5;
        }
        if !moved || g.norm() < 1e-10 * (1.0 + fx.abs()) {
            return Ok(x);
        }
    }
    Err(OracleError::NoConvergence(format!(
        "newton stopped at {:?}",
        x.as_slice()
    )))
}

fn fd_step(x: f64) -> f64 {
    1e-4 * (1.0 + x.abs())
}

pub fn numerical_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(&xp) - f(&xm)) / (2.0 * h);
    }
    g
}

pub fn numerical_hessian(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> DMatrix<f64> {
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    let f0 = f(x);
    for i in 0..d {
        let hi = fd_step(x[i]);
        for j in i..d {
            let hj = fd_step(x[j]);
            let v = if i == j {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += hi;
                xm[i] -= hi;
                (f(&xp) - 2.0 * f0 + f(&xm)) / (hi * hi)
            } else {
                let eval = |si: f64, sj: f64| {
                    let mut y = x.clone();
                    y[i] += si * hi;
                    y[j] += sj * hj;
                    f(&y)
                };
                (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                    / (4.0 * hi * hj)
            };
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect()
}

fn log_det_pd(m: &DMatrix<f64>) -> Result<f64> {
    let c = m
        .clone()
        .cholesky()
        .ok_or_else(|| OracleError::NotPositiveDefinite {
            eigenvalues: eigenvalues(m),
        })?;
    Ok(2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}
