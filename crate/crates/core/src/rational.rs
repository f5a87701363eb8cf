//! Exact rational scalars used throughout the factorization and lifted system.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn is_nonnegative(r: &Rational) -> bool {
    !r.is_negative()
}

/// Formats as `p/q`, or `p` when the denominator is one.
pub fn fmt(r: &Rational) -> String {
    if r.is_zero() {
        "0".to_string()
    } else {
        r.to_string()
    }
}

/// Lossy conversion for reporting only.
pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
