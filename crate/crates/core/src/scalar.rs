//! Scalar abstraction: every solver and operator in this crate is generic
//! over the floating-point type through [`Scalar`].

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssignOps
        + Sum<T>
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal not representable in scalar type")
}

#[inline]
pub fn pi<T: Scalar>() -> T {
    cast(std::f64::consts::PI)
}

/// Two pi, the angular period of the domain modes.
#[inline]
pub fn tau<T: Scalar>() -> T {
    cast(2.0 * std::f64::consts::PI)
}

#[inline]
pub fn half<T: Scalar>() -> T {
    cast(0.5)
}

#[inline]
pub fn two<T: Scalar>() -> T {
    cast(2.0)
}
