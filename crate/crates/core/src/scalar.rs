//! Scalar abstraction for the numeric kernels.
//!
//! The regression, suitability and statistics routines are generic over
//! [`Real`] so they work with `f32` or `f64`. The crate root exports
//! concrete `f64` aliases; the simulator and file formats are pinned to
//! `f64` because the CSV interfaces fix a 6-decimal representation.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the numeric kernels: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + ToPrimitive + core::fmt::Debug + 'static {
    /// Converts an `f64` constant into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to any Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}
