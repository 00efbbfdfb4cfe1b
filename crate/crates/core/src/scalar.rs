//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Real floating-point scalar: `f32` or `f64`.
///
/// Method calls such as `sqrt` or `ln` resolve through [`RealField`]; the
/// `num-traits` conversions carry literals in and results out.
pub trait Real:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + Serialize
    + Display
    + Debug
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    /// A tolerance no tighter than what the scalar type can resolve.
    fn tol(base: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(64.0);
        Self::lit(base).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;

pub(crate) fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

pub(crate) fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

pub(crate) fn creal<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// Base-2 logarithm, the unit every entropy in the crate is reported in.
pub(crate) fn log2<T: Real>(x: T) -> T {
    x.ln() / T::ln_2()
}

/// `-x log2 x` with `0 log 0 = 0`.
pub fn eta<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        -x * log2(x)
    }
}

/// Binary entropy in bits.
pub fn binary_entropy<T: Real>(p: T) -> T {
    eta(p) + eta(T::one() - p)
}

/// Modulus of a complex number.
pub(crate) fn cabs<T: Real>(z: C<T>) -> T {
    z.norm_sqr().sqrt()
}
