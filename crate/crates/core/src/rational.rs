//! Exact rational helpers: literal parsing and canonical rendering.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Prob = BigRational;

pub fn int(n: i64) -> Prob {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Prob {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `p/q`, a decimal such as `0.32`, or an integer, exactly.
/// Negative values are rejected.
pub fn parse_rational(text: &str) -> Option<Prob> {
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if let Some((num, den)) = text.split_once('/') {
        if !digits(num) || !digits(den) {
            return None;
        }
        let den: BigInt = den.parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num.parse().ok()?, den));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if !digits(whole) || !digits(frac) {
            return None;
        }
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let num: BigInt = format!("{whole}{frac}").parse().ok()?;
        return Some(BigRational::new(num, scale));
    }
    if digits(text) {
        return Some(BigRational::from_integer(text.parse().ok()?));
    }
    None
}

/// Reduced `p/q`; integers print without a denominator.
pub fn format_rational(r: &Prob) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with exactly `places` digits, rounded half away from zero.
pub fn format_decimal(r: &Prob, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = r.abs() * BigRational::from_integer(scale.clone());
    let (q, rem) = scaled.numer().div_rem(scaled.denom());
    let twice = rem * 2;
    let rounded = if twice >= *scaled.denom() { q + 1 } else { q };
    let (whole, frac) = rounded.div_rem(&scale);
    let sign = if r.is_negative() && !(whole.is_zero() && frac.is_zero()) { "-" } else { "" };
    if places == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{:0>width$}", frac.to_string(), width = places)
    }
}

/// `p/q (0.xxxxxx)`, the transcript rendering of a probability.
pub fn render(r: &Prob) -> String {
    format!("{} ({})", format_rational(r), format_decimal(r, 6))
}

pub fn zero() -> Prob {
    Prob::zero()
}

pub fn one() -> Prob {
    Prob::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_rational("0.32"), Some(ratio(8, 25)));
        assert_eq!(parse_rational("0.001"), Some(ratio(1, 1000)));
        assert_eq!(parse_rational("3/17"), Some(ratio(3, 17)));
        assert_eq!(parse_rational("1"), Some(int(1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("-1"), None);
        assert_eq!(parse_rational(".5"), None);
        assert_eq!(parse_rational("1."), None);
    }

    #[test]
    fn rendering() {
        assert_eq!(format_rational(&ratio(38, 43)), "38/43");
        assert_eq!(format_rational(&ratio(4, 2)), "2");
        assert_eq!(format_decimal(&ratio(4, 17), 6), "0.235294");
        assert_eq!(format_decimal(&ratio(1, 8), 2), "0.13");
        assert_eq!(format_decimal(&ratio(13, 16), 6), "0.812500");
        assert_eq!(format_decimal(&int(1), 6), "1.000000");
        assert_eq!(render(&ratio(3, 17)), "3/17 (0.176471)");
    }
}
