//! Floating point abstraction for the process and scheme layers.

use num_traits::{Float, FromPrimitive};

/// Scalar type the generic layers are written against: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used to feed `f64` random draws and
    /// literal constants into generic code.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}
