//! Scalar abstraction: the numerical kernels are generic over the floating
//! point type, with `f64` as the concrete type used by the CLI.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the solvers and norms are written against.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossily convert an `f64` constant into this scalar type.
    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    /// Lossily view this scalar as an `f64` (used for reporting).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
