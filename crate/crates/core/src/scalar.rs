//! Floating-point scalar abstraction shared by the evaluator, the second-stage
//! solver and the SOS2 line search.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type the model is generic over (`f64` in production, `f32`
/// for reduced-precision experiments).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        // f32/f64 conversions from f64 never fail
        Self::from_f64(x).expect("finite literal")
    }

    /// Lossy conversion to `f64`, used for reporting and LP export.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Relative difference `|a - b| / max(1, |a|, |b|)`.
pub fn rel_diff<T: Scalar>(a: T, b: T) -> T {
    let scale = T::one().max(a.abs()).max(b.abs());
    (a - b).abs() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(<f64 as Scalar>::lit(0.25), 0.25);
        assert_eq!(<f32 as Scalar>::lit(0.25), 0.25f32);
        assert_eq!(1.5f32.as_f64(), 1.5);
    }

    #[test]
    fn rel_diff_uses_unit_floor() {
        assert!((rel_diff(1e-14, 0.0) - 1e-14).abs() < 1e-20);
        assert!((rel_diff(200.0, 100.0) - 0.5).abs() < 1e-15);
    }
}
