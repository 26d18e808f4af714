//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type the library computes in.
///
/// Implemented for `f32` and `f64`. Everything numeric in the crate is
/// generic over this trait; the crate root re-exports `f64` aliases for the
/// common case.
pub trait Scalar:
    Float
    + FromPrimitive
    + Sum
    + Debug
    + Display
    + FromStr
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Absolute gradient norm below which a smooth objective counts as stationary.
    const STATIONARITY_TOL: f64;

    /// Converts an `f64` constant. Panics only for values the type cannot hold.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const STATIONARITY_TOL: f64 = 1e-3;
}

impl Scalar for f64 {
    const STATIONARITY_TOL: f64 = 1e-8;
}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len()))
}

/// Largest element, ignoring ordering issues with NaN (callers keep series finite).
pub fn max_of<T: Scalar>(xs: &[T]) -> Option<T> {
    xs.iter().copied().reduce(T::max)
}
