//! Floating-point abstraction shared by the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point: f32 or f64.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Lossy for narrower types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Infinity norm of a slice; NaN propagates as infinity.
pub fn inf_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| {
        let a = x.abs();
        if a.is_nan() {
            T::infinity()
        } else {
            acc.max(a)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inf_norm_flags_nan() {
        assert_eq!(inf_norm(&[1.0f64, -3.0, 2.0]), 3.0);
        assert!(inf_norm(&[1.0f64, f64::NAN]).is_infinite());
        assert_eq!(inf_norm::<f32>(&[]), 0.0);
    }
}
