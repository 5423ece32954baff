//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Algorithms are written against [`Scalar`] and monomorphised for `f32` or
//! `f64`. Configuration values (noise parameters, tolerances, file formats)
//! stay `f64` and are converted at the boundary with [`Scalar::lit`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or config value into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable in every Scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Weighted mean of `values`; weights need not be normalised.
pub(crate) fn weighted_mean<S: Scalar>(values: impl Iterator<Item = (S, S)>) -> S {
    let (mut num, mut den) = (S::zero(), S::zero());
    for (v, w) in values {
        num += v * w;
        den += w;
    }
    num / den
}
