//! Scalar trait bounds for the exact arithmetic used throughout the crate.
//!
//! Everything numeric is generic over an integer scalar implementing
//! [`IntScalar`]; rationals are `num_rational::Ratio` over the same scalar.
//! The crate root fixes concrete aliases (`Int`, `Rat`, ...) on `BigInt`,
//! which is the safe default because matrix powers and determinants overflow
//! fixed-width integers quickly. Tests may instantiate with `i64` where the
//! inputs are provably small.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_integer::Integer;
use num_traits::{FromPrimitive, Signed, ToPrimitive};

/// Exact integer scalar: ring ops, euclidean division, gcd, signs.
pub trait IntScalar:
    Integer
    + Signed
    + Clone
    + Hash
    + Debug
    + Display
    + FromPrimitive
    + ToPrimitive
    + From<i32>
    + Send
    + Sync
    + 'static
{
    fn from_i64_exact(v: i64) -> Self {
        Self::from_i64(v).expect("i64 must embed into the scalar type")
    }
}

impl<T> IntScalar for T where
    T: Integer
        + Signed
        + Clone
        + Hash
        + Debug
        + Display
        + FromPrimitive
        + ToPrimitive
        + From<i32>
        + Send
        + Sync
        + 'static
{
}

/// Exact rational built over an [`IntScalar`].
pub type Ratio<I> = num_rational::Ratio<I>;
