//! Exact rationals: parsing, formatting and a few helpers on `BigRational`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Parses `p/q`, an integer, or a finite decimal such as `0.25`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Parse(format!("not a rational: `{text}`"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{text}`")));
        }
        return Ok(Rational::new(p, q));
    }
    let (neg, digits) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let mantissa: BigInt = format!("0{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let r = Rational::new(mantissa, den);
    Ok(if neg { -r } else { r })
}

/// `num/den` in lowest terms; integers keep the `/1`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn from_u64(v: u64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn from_biguint(v: BigUint) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Smallest integer `≥ r`.
pub fn ceil_to_biguint(r: &Rational) -> BigUint {
    let c = r.ceil().to_integer();
    c.to_biguint().unwrap_or_default()
}

/// Lossy conversion for reporting and for floating point sampling.
pub fn to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Scale both sides down to keep the quotient representable.
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Whether `0 < r < 1`.
pub fn in_open_unit(r: &Rational) -> bool {
    r.is_positive() && r < &Rational::one()
}
