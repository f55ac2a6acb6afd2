//! Scalar abstraction for the numerical core.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the special functions, quadrature and risk
/// functionals are generic over. Implemented for `f32` and `f64`; the
/// rest of the crate works with the [`crate::Scalar`] alias (`f64`).
pub trait Real: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + 'static {
    /// Converts an `f64` constant into the scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Converts a nonnegative integer count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in scalar type")
    }

    fn half() -> Self {
        Self::of(0.5)
    }

    fn two() -> Self {
        Self::of(2.0)
    }
}

impl<T> Real for T where T: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + 'static {}
