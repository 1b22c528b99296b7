//! Numeric abstraction shared by the floating-point and exact code paths.
//!
//! Everything in [`crate::market`] is generic over [`Scalar`], so the same
//! auction and certificate code runs on `f64` (with tolerances) and on
//! [`Rational`] (exactly, tolerance zero).

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Ordered field used by the market code.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync
{
    /// Exact conversion from a binary double (identity for `f64`).
    fn from_f64_exact(x: f64) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_finite_value(&self) -> bool {
        true
    }

    /// Strictly greater than zero (`+0.0` is not).
    fn gt_zero(&self) -> bool {
        *self > Self::zero()
    }

    /// Strictly less than zero (`-0.0` is not).
    fn lt_zero(&self) -> bool {
        *self < Self::zero()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    fn from_f64_exact(x: f64) -> Self {
        x
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Rational {
    fn from_f64_exact(x: f64) -> Self {
        Rational::from_float(x).expect("finite value")
    }
}

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn rat_int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Parses decimal text (`"12"`, `"-0.125"`, `"3.5e-2"`) into the exact
/// rational it denotes.
pub fn parse_decimal_exact(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::Parse {
        line: 0,
        message: format!("not a decimal number: {text:?}"),
    };
    if s.is_empty() {
        return Err(bad());
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(pos) => (&digits[..pos], &digits[pos + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str_radix(if all_digits.is_empty() { "0" } else { &all_digits }, 10)
        .map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Smallest-denominator rational in the closed interval `[lo, hi]`
/// (Stern–Brocot descent). Both bounds must be positive.
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    debug_assert!(lo <= hi);
    if lo.is_integer() {
        return lo.clone();
    }
    let fl = lo.floor();
    if &(fl.clone() + Rational::one()) <= hi {
        return fl + Rational::one();
    }
    // lo and hi share the integer part; recurse on reciprocals of the
    // fractional parts.
    let a = fl.clone();
    let lo_frac = lo - &a;
    let hi_frac = hi - &a;
    if hi_frac.is_zero() {
        return a;
    }
    let inner = simplest_between(&hi_frac.recip(), &lo_frac.recip());
    a + inner.recip()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_and_scientific_decimals() {
        assert_eq!(parse_decimal_exact("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_decimal_exact("-3").unwrap(), rat_int(-3));
        assert_eq!(parse_decimal_exact("2.5e-1").unwrap(), rat(1, 4));
        assert_eq!(parse_decimal_exact(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_decimal_exact("1e3").unwrap(), rat_int(1000));
        assert!(parse_decimal_exact("abc").is_err());
        assert!(parse_decimal_exact("").is_err());
        assert!(parse_decimal_exact("1.2.3").is_err());
    }

    #[test]
    fn exact_float_conversion_is_lossless() {
        let r = Rational::from_f64_exact(0.1);
        assert_eq!(r.to_f64_lossy(), 0.1);
        assert_ne!(r, rat(1, 10));
    }

    #[test]
    fn simplest_rational_in_interval() {
        assert_eq!(simplest_between(&rat(3, 10), &rat(4, 10)), rat(1, 3));
        assert_eq!(simplest_between(&rat(5, 2), &rat(7, 2)), rat_int(3));
        assert_eq!(simplest_between(&rat(2, 3), &rat(2, 3)), rat(2, 3));
        let lo = rat(1414213, 1000000);
        let hi = rat(1414214, 1000000);
        let s = simplest_between(&lo, &hi);
        assert!(s >= lo && s <= hi);
    }
}
