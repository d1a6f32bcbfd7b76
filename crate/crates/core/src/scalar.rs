//! Scalar types the time steppers can run on.
//!
//! Benchmarks run on `f64`; the stability analysis drives the very same code
//! with `Complex64` so that `λk` can range over the complex plane.

use std::fmt::Debug;
use std::ops::Neg;

use num_complex::Complex64;
use num_traits::NumAssign;

/// Field element of a state vector.
pub trait Scalar: NumAssign + Neg<Output = Self> + Copy + Debug + Send + Sync + 'static {
    fn from_real(x: f64) -> Self;

    /// Absolute value for reals, modulus for complex numbers.
    fn modulus(self) -> f64;

    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }

    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }

    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }

    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }

    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Max-norm of a state vector.
pub fn max_norm<S: Scalar>(v: &[S]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.modulus()))
}

pub fn all_finite<S: Scalar>(v: &[S]) -> bool {
    v.iter().all(|x| x.is_finite())
}
