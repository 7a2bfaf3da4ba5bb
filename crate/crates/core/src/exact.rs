//! Directed rounding from exact rationals to `f64` and to decimal text.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// A reduced fraction as stored in certificate files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExactRational {
    pub num: i128,
    pub den: i128,
}

impl From<Ratio<i128>> for ExactRational {
    fn from(r: Ratio<i128>) -> Self {
        ExactRational {
            num: *r.numer(),
            den: *r.denom(),
        }
    }
}

impl ExactRational {
    /// `None` when the denominator is zero.
    pub fn to_ratio(self) -> Option<Ratio<i128>> {
        (self.den != 0).then(|| Ratio::new(self.num, self.den))
    }

    pub fn to_big(self) -> BigRational {
        BigRational::new(self.num.into(), self.den.into())
    }
}

pub fn big(r: &Ratio<i128>) -> BigRational {
    BigRational::new((*r.numer()).into(), (*r.denom()).into())
}

fn cmp_float(r: &BigRational, f: f64) -> Ordering {
    r.cmp(&BigRational::from_float(f).expect("finite"))
}

fn approx(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::MIN
        } else {
            f64::MAX
        }
    })
}

/// Largest `f64` not exceeding `r`.
pub fn floor_f64_big(r: &BigRational) -> f64 {
    let mut f = approx(r);
    while cmp_float(r, f) == Ordering::Less {
        f = f.next_down();
    }
    f
}

/// Smallest `f64` not below `r`.
pub fn ceil_f64_big(r: &BigRational) -> f64 {
    let mut f = approx(r);
    while cmp_float(r, f) == Ordering::Greater {
        f = f.next_up();
    }
    f
}

pub fn floor_f64(r: &Ratio<i128>) -> f64 {
    floor_f64_big(&big(r))
}

pub fn ceil_f64(r: &Ratio<i128>) -> f64 {
    ceil_f64_big(&big(r))
}

fn scaled_by_pow10(r: &BigRational, digits: u32) -> BigRational {
    r * BigRational::from_integer(BigInt::from(10u32).pow(digits))
}

fn render(mut q: BigInt, digits: u32) -> String {
    let neg = q.is_negative();
    q = q.abs();
    let unit = BigInt::from(10u32).pow(digits);
    let (int, frac) = q.div_rem(&unit);
    let sign = if neg && !(int.is_zero() && frac.is_zero()) { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac:0>width$}", width = digits as usize)
    }
}

/// Decimal text truncated toward zero: never larger in magnitude than `r`.
pub fn fmt_truncated(r: &BigRational, digits: u32) -> String {
    render(scaled_by_pow10(r, digits).trunc().to_integer(), digits)
}

/// Decimal text rounded toward negative infinity: never larger than `r`.
///
/// Agrees with [`fmt_truncated`] for nonnegative values; use it for lower bounds that may be negative.
pub fn fmt_floor(r: &BigRational, digits: u32) -> String {
    render(scaled_by_pow10(r, digits).floor().to_integer(), digits)
}

/// Decimal text correctly rounded to nearest (ties away from zero).
pub fn fmt_rounded(r: &BigRational, digits: u32) -> String {
    render(scaled_by_pow10(r, digits).round().to_integer(), digits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directed_rounding_brackets_the_value() {
        for (n, d) in [(1i128, 3i128), (-1, 3), (2, 1), (7, 10), (-22, 7), (1, 1 << 60)] {
            let r = Ratio::new(n, d);
            let lo = floor_f64(&r);
            let hi = ceil_f64(&r);
            let b = big(&r);
            assert!(BigRational::from_float(lo).unwrap() <= b);
            assert!(BigRational::from_float(hi).unwrap() >= b);
            assert!(hi == lo || hi == lo.next_up());
        }
        assert_eq!(floor_f64(&Ratio::new(1, 2)), 0.5);
        assert_eq!(ceil_f64(&Ratio::new(1, 2)), 0.5);
    }

    #[test]
    fn decimal_rendering() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(fmt_truncated(&r(7, 8), 6), "0.875000");
        assert_eq!(fmt_truncated(&r(2, 3), 6), "0.666666");
        assert_eq!(fmt_rounded(&r(2, 3), 6), "0.666667");
        assert_eq!(fmt_truncated(&r(-2, 3), 6), "-0.666666");
        assert_eq!(fmt_truncated(&r(-1, 3_000_000), 6), "0.000000");
        assert_eq!(fmt_truncated(&r(109, 100), 2), "1.09");
        assert_eq!(fmt_truncated(&r(5, 1), 0), "5");
        assert_eq!(fmt_floor(&r(2, 3), 6), "0.666666");
        assert_eq!(fmt_floor(&r(-2, 3), 6), "-0.666667");
        assert_eq!(fmt_floor(&r(-1, 1), 6), "-1.000000");
        assert_eq!(fmt_floor(&r(-1, 3_000_000), 6), "-0.000001");
    }
}
