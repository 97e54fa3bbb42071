//! Observation models `p(x | φ)` with the integral `∫ p(x | φ)^β dx` needed by the β-loss.

use gbcal_core::numerics::gauss_hermite;
use gbcal_core::{ln_2pi, normal_logpdf, Real, Rng64};
use serde::{Deserialize, Serialize};

use crate::error::{LossError, Result};

/// How `∫ p^β` is evaluated when a model offers more than one route.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegralMethod {
    #[default]
    ClosedForm,
    GaussHermite(usize),
    Trapezoid(usize),
}

/// Nodes used when a model has no closed-form power integral.
pub const DEFAULT_HERMITE_NODES: usize = 31;
/// Grid used by trapezoid cross-checks, spanning ±10 scale units.
pub const DEFAULT_TRAPEZOID_POINTS: usize = 4001;

pub trait ObservationModel<T: Real>: Send + Sync {
    fn n_params(&self) -> usize;

    fn log_density(&self, x: &[T], phi: &[T]) -> T;

    fn in_domain(&self, _phi: &[T]) -> bool {
        true
    }

    fn closed_power_integral(&self, _phi: &[T], _beta: T) -> Option<T> {
        None
    }

    /// Location and scale of a scalar observation, used to centre quadrature.
    fn frame(&self, _phi: &[T]) -> Option<(T, T)> {
        None
    }

    fn grad_log_density(&self, _x: &[T], _phi: &[T]) -> Option<Vec<T>> {
        None
    }

    /// Gradient in `φ` of `log ∫ p(x | φ)^β dx`.
    fn grad_log_power_integral(&self, _phi: &[T], _beta: T) -> Option<Vec<T>> {
        None
    }

    fn sample(&self, phi: &[T], rng: &mut Rng64) -> Vec<T>;
}

/// `∫ p(x | φ)^β dx` for a scalar-observation model.
pub fn power_integral<T: Real, M: ObservationModel<T> + ?Sized>(
    model: &M,
    phi: &[T],
    beta: T,
    method: IntegralMethod,
) -> Result<T> {
    if !(beta > T::zero()) {
        return Err(LossError::Divergent {
            beta: beta.f64(),
            reason: "beta must be positive".into(),
        });
    }
    let method = match method {
        IntegralMethod::ClosedForm => match model.closed_power_integral(phi, beta) {
            Some(v) => return Ok(v),
            None => IntegralMethod::GaussHermite(DEFAULT_HERMITE_NODES),
        },
        m => m,
    };
    let (loc, scale) = model.frame(phi).ok_or_else(|| LossError::Divergent {
        beta: beta.f64(),
        reason: "model exposes neither a closed form nor a quadrature frame".into(),
    })?;
    // p^β of a location-scale density has scale ≈ scale/√β.
    let s = scale / beta.sqrt();
    let value = match method {
        IntegralMethod::GaussHermite(k) => {
            let (z, w) = gauss_hermite(k);
            let root2 = T::SQRT_2();
            let mut acc = T::zero();
            for (&zi, &wi) in z.iter().zip(&w) {
                let zt = T::c(zi);
                let x = loc + root2 * s * zt;
                acc += T::c(wi) * (zt * zt + beta * model.log_density(&[x], phi)).exp();
            }
            acc * root2 * s
        }
        IntegralMethod::Trapezoid(points) => {
            let m = points.max(3);
            let half = T::c(10.0) * s;
            let h = (half + half) / T::from_usize_lossy(m - 1);
            let mut acc = T::zero();
            for i in 0..m {
                let x = loc - half + h * T::from_usize_lossy(i);
                let w = if i == 0 || i + 1 == m {
                    T::c(0.5)
                } else {
                    T::one()
                };
                acc += w * (beta * model.log_density(&[x], phi)).exp();
            }
            acc * h
        }
        IntegralMethod::ClosedForm => unreachable!(),
    };
    if value.is_finite() && value > T::zero() {
        Ok(value)
    } else {
        Err(LossError::Divergent {
            beta: beta.f64(),
            reason: format!("quadrature returned {value}"),
        })
    }
}

/// `∫ N(x; m, v)^β dx = β^{-1/2} (2πv)^{(1-β)/2}`.
pub fn normal_power_integral<T: Real>(var: T, beta: T) -> T {
    let half = T::c(0.5);
    (-half * beta.ln() + half * (T::one() - beta) * (ln_2pi::<T>() + var.ln())).exp()
}

/// `x ~ N(φ_0, φ_1)` with both mean and variance unknown.
#[derive(Clone, Copy, Debug, Default)]
pub struct NormalMeanVar;

impl<T: Real> ObservationModel<T> for NormalMeanVar {
    fn n_params(&self) -> usize {
        2
    }
    fn log_density(&self, x: &[T], phi: &[T]) -> T {
        normal_logpdf(x[0], phi[0], phi[1])
    }
    fn in_domain(&self, phi: &[T]) -> bool {
        phi[1] > T::zero()
    }
    fn closed_power_integral(&self, phi: &[T], beta: T) -> Option<T> {
        Some(normal_power_integral(phi[1], beta))
    }
    fn frame(&self, phi: &[T]) -> Option<(T, T)> {
        Some((phi[0], phi[1].sqrt()))
    }
    fn grad_log_density(&self, x: &[T], phi: &[T]) -> Option<Vec<T>> {
        let d = x[0] - phi[0];
        let v = phi[1];
        Some(vec![d / v, T::c(0.5) * (d * d / (v * v) - T::one() / v)])
    }
    fn grad_log_power_integral(&self, phi: &[T], beta: T) -> Option<Vec<T>> {
        Some(vec![T::zero(), T::c(0.5) * (T::one() - beta) / phi[1]])
    }
    fn sample(&self, phi: &[T], rng: &mut Rng64) -> Vec<T> {
        vec![phi[0] + phi[1].sqrt() * T::std_normal(rng)]
    }
}

/// `x ~ N(φ_0, σ²)` with known variance.
#[derive(Clone, Copy, Debug)]
pub struct NormalKnownVar<T: Real> {
    pub var: T,
}

impl<T: Real> ObservationModel<T> for NormalKnownVar<T> {
    fn n_params(&self) -> usize {
        1
    }
    fn log_density(&self, x: &[T], phi: &[T]) -> T {
        normal_logpdf(x[0], phi[0], self.var)
    }
    fn closed_power_integral(&self, _phi: &[T], beta: T) -> Option<T> {
        Some(normal_power_integral(self.var, beta))
    }
    fn frame(&self, phi: &[T]) -> Option<(T, T)> {
        Some((phi[0], self.var.sqrt()))
    }
    fn grad_log_density(&self, x: &[T], phi: &[T]) -> Option<Vec<T>> {
        Some(vec![(x[0] - phi[0]) / self.var])
    }
    fn grad_log_power_integral(&self, _phi: &[T], _beta: T) -> Option<Vec<T>> {
        Some(vec![T::zero()])
    }
    fn sample(&self, phi: &[T], rng: &mut Rng64) -> Vec<T> {
        vec![phi[0] + self.var.sqrt() * T::std_normal(rng)]
    }
}

/// `x ~ N(φ_0 + φ_1, σ²)`: the suspect module of the two-module normal model, parameters `(φ, θ)`.
#[derive(Clone, Copy, Debug)]
pub struct ShiftedNormal<T: Real> {
    pub var: T,
}

impl<T: Real> ObservationModel<T> for ShiftedNormal<T> {
    fn n_params(&self) -> usize {
        2
    }
    fn log_density(&self, x: &[T], phi: &[T]) -> T {
        normal_logpdf(x[0], phi[0] + phi[1], self.var)
    }
    fn closed_power_integral(&self, _phi: &[T], beta: T) -> Option<T> {
        Some(normal_power_integral(self.var, beta))
    }
    fn frame(&self, phi: &[T]) -> Option<(T, T)> {
        Some((phi[0] + phi[1], self.var.sqrt()))
    }
    fn grad_log_density(&self, x: &[T], phi: &[T]) -> Option<Vec<T>> {
        let g = (x[0] - phi[0] - phi[1]) / self.var;
        Some(vec![g, g])
    }
    fn grad_log_power_integral(&self, _phi: &[T], _beta: T) -> Option<Vec<T>> {
        Some(vec![T::zero(), T::zero()])
    }
    fn sample(&self, phi: &[T], rng: &mut Rng64) -> Vec<T> {
        vec![phi[0] + phi[1] + self.var.sqrt() * T::std_normal(rng)]
    }
}
