//! Scalar abstraction shared by every numerical kernel in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub(crate) fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// Sign as an `i8` in {-1, 0, +1}; NaN maps to 0.
#[inline]
pub(crate) fn sign_of<T: Real>(x: T) -> i8 {
    if x > T::zero() {
        1
    } else if x < T::zero() {
        -1
    } else {
        0
    }
}

/// Maps an angle increment onto (-pi, pi].
#[inline]
pub(crate) fn wrap_angle<T: Real>(mut a: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    while a > pi {
        a = a - two_pi;
    }
    while a <= -pi {
        a = a + two_pi;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        let pi = std::f64::consts::PI;
        assert!((wrap_angle(3.0 * pi) - pi).abs() < 1e-12);
        assert!((wrap_angle(-pi) - pi).abs() < 1e-12);
        assert!((wrap_angle(0.5f64) - 0.5).abs() < 1e-15);
        assert!((wrap_angle(-2.5 * pi) + 0.5 * pi).abs() < 1e-12);
    }

    #[test]
    fn sign_of_handles_zero_and_nan() {
        assert_eq!(sign_of(2.0f32), 1);
        assert_eq!(sign_of(-0.0f64), 0);
        assert_eq!(sign_of(f64::NAN), 0);
    }
}
