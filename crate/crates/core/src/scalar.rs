use std::fmt;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type carried through all latency/cost arithmetic: `f32` or `f64`.
///
/// Byte counts and FLOP counts stay `u64` throughout the crate; this trait
/// only covers the continuous quantities (seconds, bandwidths, costs).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + fmt::Display + fmt::Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from an exact byte/FLOP count.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).unwrap_or_else(|| Self::max_value())
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + fmt::Display
        + fmt::Debug
        + Default
        + Send
        + Sync
        + 'static
{
}
