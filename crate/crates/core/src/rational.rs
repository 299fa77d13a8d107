//! Exact rational arithmetic helpers.
//!
//! Every quantity the verifiers compare (waiting sums, penalties, covering
//! weights, lemma bounds) is an arbitrary-precision rational. No floating
//! point is used anywhere in the engine or the checkers, so argmax decisions
//! and inequality checks are bit-reproducible.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, canonical form with positive denominator.
pub type Rat = num_rational::BigRational;

/// Rational from an integer.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Rational `n/d`. Panics if `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Smallest integer `>= x`, as an `i64`.
///
/// Panics if the result does not fit; interval endpoints in this crate are
/// derived from schedule times, which are well inside `i64` range.
pub fn ceil_to_i64(x: &Rat) -> i64 {
    x.ceil()
        .to_integer()
        .to_i64()
        .expect("interval endpoint out of i64 range")
}

/// `x^k` for a non-negative integer exponent.
pub fn pow_u32(x: &Rat, k: u32) -> Rat {
    let mut acc = rat(1);
    for _ in 0..k {
        acc *= x;
    }
    acc
}

/// Fixed-point decimal rendering (truncated towards zero) used next to the
/// exact form in reports. The exact rational remains the source of truth.
pub fn decimal_string(x: &Rat, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = (x * Rat::from_integer(scale)).trunc().to_integer();
    let sign = if scaled.is_negative() { "-" } else { "" };
    let abs = scaled.abs().to_string();
    let places = places as usize;
    if places == 0 {
        return format!("{sign}{abs}");
    }
    let digits = if abs.len() <= places {
        format!("{}{}", "0".repeat(places + 1 - abs.len()), abs)
    } else {
        abs
    };
    let split = digits.len() - places;
    format!("{sign}{}.{}", &digits[..split], &digits[split..])
}

/// True iff `x` is an integer.
pub fn is_integer(x: &Rat) -> bool {
    x.fract().is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_handles_negative_and_fractional() {
        assert_eq!(ceil_to_i64(&ratio(7, 2)), 4);
        assert_eq!(ceil_to_i64(&ratio(-7, 2)), -3);
        assert_eq!(ceil_to_i64(&rat(5)), 5);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_string(&ratio(15, 4), 6), "3.750000");
        assert_eq!(decimal_string(&ratio(-1, 3), 6), "-0.333333");
        assert_eq!(decimal_string(&rat(2), 2), "2.00");
    }

    #[test]
    fn display_is_exact() {
        assert_eq!(ratio(15, 4).to_string(), "15/4");
        assert_eq!(rat(7).to_string(), "7");
    }
}
