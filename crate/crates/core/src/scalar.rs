//! Floating-point abstraction shared by the channel model, the network
//! kernel and the agents.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Real scalar the numerical core is generic over. Implemented for `f32`
/// and `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + std::str::FromStr
    + 'static
{
    /// Lossy conversion from `f64`. Every finite `f64` maps to some value
    /// of the target type, so this never fails.
    fn of(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

macro_rules! impl_scalar {
    ($($t:ty)*) => ($(
        impl Scalar for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }
        }
    )*)
}

impl_scalar!(f32 f64);

#[cfg(test)]
mod tests {
    use super::*;

    fn halve<T: Scalar>(x: T) -> T {
        x / T::of(2.0)
    }

    #[test]
    fn both_widths_work() {
        assert_eq!(halve(3.0f32), 1.5f32);
        assert_eq!(halve(3.0f64), 1.5f64);
        assert_eq!(Scalar::as_f64(0.25f32), 0.25);
    }
}
