use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the solvers are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every finite `f64` is representable (possibly rounded).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Standard normal cumulative distribution function.
pub fn norm_cdf<T: Real>(x: T) -> T {
    let v = 0.5 * libm::erfc(-x.as_f64() / std::f64::consts::SQRT_2);
    T::lit(v)
}

/// Standard normal density.
pub fn norm_pdf<T: Real>(x: T) -> T {
    let two = T::lit(2.0);
    (-(x * x) / two).exp() / (two * T::PI()).sqrt()
}

/// Upper tail `P(Z > x)` of a standard normal, accurate far into the tail.
pub fn norm_sf<T: Real>(x: T) -> T {
    T::lit(0.5 * libm::erfc(x.as_f64() / std::f64::consts::SQRT_2))
}
