use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Real scalar the analysis is generic over (`f32`, `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot hold it.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts an index `n` to the scalar type.
    #[inline]
    fn idx(n: usize) -> Self {
        Self::from_usize(n).expect("index representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `sqrt(1 + x) - 1` without cancellation for small `x`.
    #[inline]
    fn sqrt1pm1(self) -> Self {
        self / (Self::one() + (Self::one() + self).sqrt())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt1pm1_matches_naive_for_moderate_x() {
        for &x in &[0.5_f64, 2.0, -0.3] {
            assert!((x.sqrt1pm1() - ((1.0 + x).sqrt() - 1.0)).abs() < 1e-15);
        }
        // naive form loses all digits here
        let x = 1e-17_f64;
        assert!((x.sqrt1pm1() - 0.5e-17).abs() < 1e-32);
    }

    #[test]
    fn literals_round_trip_in_f32() {
        assert_eq!(<f32 as Scalar>::lit(0.25), 0.25_f32);
        assert_eq!(<f32 as Scalar>::idx(7), 7.0_f32);
    }
}
