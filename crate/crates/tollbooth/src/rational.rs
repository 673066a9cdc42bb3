//! Exact rational arithmetic helpers.
//!
//! Prices and budgets are arbitrary-precision rationals throughout; the
//! segment-total invariant and the oracle comparisons rely on exact
//! equality, so floating point never enters the solve path.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::Error;

/// The numeric type for all budgets, prices and revenues.
pub type Rat = BigRational;

/// Rational from an integer.
pub fn rat_int<T: Into<i64>>(v: T) -> Rat {
    Rat::from_integer(BigInt::from(v.into()))
}

/// Rational from a numerator/denominator pair. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Parse `"p/q"` or `"p"` into a non-negative rational.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let s = s.trim();
    let bad = || Error::BadRational(s.to_string());
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: BigInt = num.trim().parse().map_err(|_| bad())?;
            let den: BigInt = den.trim().parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            Rat::new(num, den)
        }
        None => Rat::from_integer(s.parse().map_err(|_| bad())?),
    };
    if value.is_negative() {
        return Err(Error::NegativeRational(s.to_string()));
    }
    Ok(value)
}

/// Canonical text form: `"p/q"` reduced, or `"p"` when integral.
pub fn format_rat(r: &Rat) -> String {
    r.to_string()
}

/// Decimal rendering to six places, for report columns. Truncates toward zero.
pub fn decimal6(r: &Rat) -> String {
    let scaled = r * rat_int(1_000_000);
    let whole = scaled.to_integer();
    let sign = if whole.is_negative() { "-" } else { "" };
    let abs = whole.abs();
    let int_part = &abs / BigInt::from(1_000_000);
    let frac_part = &abs % BigInt::from(1_000_000);
    format!("{sign}{int_part}.{frac_part:06}")
}
