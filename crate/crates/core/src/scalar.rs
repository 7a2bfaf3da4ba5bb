//! Numeric backends for profiles and evaluations.
//!
//! `f64` is the fast path used by search. `BigRational` gives exact
//! arithmetic for checking identities and building exact certificates.

use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync
{
    /// Tolerance-aware equality. Exact backends ignore `rel`.
    fn close_rel(&self, other: &Self, rel: f64) -> bool;

    fn is_negative_value(&self) -> bool {
        *self < Self::zero()
    }

    fn from_count(c: usize) -> Self {
        Self::from_usize(c).expect("count representable in scalar")
    }
}

impl Scalar for f64 {
    fn close_rel(&self, other: &Self, rel: f64) -> bool {
        let scale = self.abs().max(other.abs());
        (self - other).abs() <= rel * scale
    }
}

impl Scalar for BigRational {
    fn close_rel(&self, other: &Self, _rel: f64) -> bool {
        self == other
    }

    fn is_negative_value(&self) -> bool {
        self.is_negative()
    }
}

/// Converts an `f64` profile coefficient into an exact rational (the binary value, unrounded).
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub(crate) fn max_of<T: Scalar>(values: impl IntoIterator<Item = T>) -> Option<T> {
    values.into_iter().fold(None, |acc, v| match acc {
        None => Some(v),
        Some(a) => Some(if v > a { v } else { a }),
    })
}
