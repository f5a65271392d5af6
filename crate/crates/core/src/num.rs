//! Scalar abstraction for the numerical core.
//!
//! Everything downstream is generic over [`Real`], which bundles the float
//! capabilities actually used: arithmetic and elementary functions
//! (`num_traits::Float`), math constants (`FloatConst`), conversions from
//! `f64` literals, and FFT support (`rustfft::FftNum`). `f32` and `f64`
//! implement it; the crate root exports `f64` aliases for the common types.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar usable by every module in this crate.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + rustfft::FftNum + Display + Debug
{
    /// Converts an `f64` literal into the scalar type.
    ///
    /// Panics if the value is not representable, which cannot happen for the
    /// finite literals used in this crate.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal must convert")
    }

    /// Lossy view as `f64` (exact for `f64`, widened for `f32`).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real scalar must convert to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// SplitMix64 hop: derives statistically independent sub-seeds from a base
/// seed and an index, so ensemble replicate k is reproducible regardless of
/// worker count or evaluation order.
pub fn split_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
