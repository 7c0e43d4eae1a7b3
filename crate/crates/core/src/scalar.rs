//! Scalar abstraction for the numeric kernels.
//!
//! All geometry, loss, outlier-scoring, and evaluation math is generic over
//! [`Real`], so the same kernels run in `f32` or `f64`. File formats and the
//! CLI pin `f64` through the aliases at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: num_traits::Float + num_traits::FromPrimitive + Sum + Debug + Display + 'static {
    /// Lossless-enough conversion from `f64` for constants and counts.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Real")
    }

    /// Conversion from a count; exact for every count this crate produces.
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts to any Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}
