//! Scalar abstraction shared by every numeric routine.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};
use std::fmt::{Debug, Display};
use std::iter::{Product, Sum};

/// Floating-point type the library is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Product
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Literal conversion from `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn to64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }

    #[inline]
    fn from_usize_lossy(k: usize) -> Self {
        Self::from_usize(k).expect("count representable")
    }

    /// A requested tolerance, floored at a few ulps of the type.
    #[inline]
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(64.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}
