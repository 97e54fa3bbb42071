//! Scalar abstraction shared by the numerical code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating point type usable by the generic kernels (implemented for `f32` and `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count.
    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }

    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw on the open interval (0, 1).
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f64 {
    #[inline]
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    #[inline]
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::Open01)
    }
}

impl Real for f32 {
    #[inline]
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    #[inline]
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::Open01)
    }
}

/// `log(2π)`.
#[inline]
pub fn ln_2pi<T: Real>() -> T {
    (T::PI() + T::PI()).ln()
}

/// Log density of `N(mean, var)` at `x`.
#[inline]
pub fn normal_logpdf<T: Real>(x: T, mean: T, var: T) -> T {
    let d = x - mean;
    -T::c(0.5) * (ln_2pi::<T>() + var.ln() + d * d / var)
}
