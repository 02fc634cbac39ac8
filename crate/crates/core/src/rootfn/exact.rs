//! Exact arithmetic for quantities of the form `Σ_e c_e (π²)^e`, with
//! complex rational `c_e`.
//!
//! The one-dimensional criteria divide by `4π²·integer` at every step; carrying
//! the powers of `π²` symbolically keeps tuned cancellations such as
//! `q_2 = -q_1² / (4π²)` exactly zero.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::f64::consts::PI;
use thiserror::Error;

pub type ComplexRational = Complex<BigRational>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse {input:?} as an exact rational")]
pub struct RationalParseError {
    pub input: String,
}

/// Parses `"p/q"`, integers, and finite decimals such as `"-0.7"` or
/// `"2.5e-3"` into an exact rational.
pub fn parse_rational(input: &str) -> Result<BigRational, RationalParseError> {
    let err = || RationalParseError {
        input: input.to_string(),
    };
    let s = input.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(num, den));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], i32::from_str(&s[pos + 1..]).map_err(|_| err())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(BigInt::from_str(&all_digits).map_err(|_| err())?);
    let shift = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if shift >= 0 {
        value *= num_traits::pow(ten, shift as usize);
    } else {
        value /= num_traits::pow(ten, (-shift) as usize);
    }
    Ok(if negative { -value } else { value })
}

/// Exact rational matching the shortest decimal that round-trips `x`.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    parse_rational(&format!("{x:e}")).ok()
}

/// Laurent polynomial in `π²` with exact complex rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PiLaurent {
    terms: BTreeMap<i32, ComplexRational>,
}

impl PiLaurent {
    pub fn zero() -> Self {
        PiLaurent::default()
    }

    pub fn one() -> Self {
        PiLaurent::rational(BigRational::from_integer(1.into()), BigRational::zero())
    }

    /// `(re + i·im) · (π²)^power`.
    pub fn monomial(re: BigRational, im: BigRational, power: i32) -> Self {
        let mut out = PiLaurent::zero();
        out.add_term(power, Complex::new(re, im));
        out
    }

    pub fn rational(re: BigRational, im: BigRational) -> Self {
        PiLaurent::monomial(re, im, 0)
    }

    pub fn from_f64(re: f64, im: f64) -> Option<Self> {
        Some(PiLaurent::rational(rational_from_f64(re)?, rational_from_f64(im)?))
    }

    fn add_term(&mut self, power: i32, c: ComplexRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(power).or_insert_with(ComplexRational::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&power);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &ComplexRational)> {
        self.terms.iter().map(|(p, c)| (*p, c))
    }

    /// Division by `4π² · k` for a nonzero integer `k`.
    pub fn div_four_pi_sq(&self, k: i64) -> Self {
        assert!(k != 0, "division by zero");
        let den = BigRational::from_integer(BigInt::from(4 * k));
        PiLaurent {
            terms: self
                .terms
                .iter()
                .map(|(p, c)| (p - 1, Complex::new(&c.re / &den, &c.im / &den)))
                .collect(),
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        self.terms
            .iter()
            .map(|(p, c)| {
                let scale = (PI * PI).powi(*p);
                let re = c.re.to_f64().unwrap_or(f64::NAN);
                let im = c.im.to_f64().unwrap_or(f64::NAN);
                Complex64::new(re * scale, im * scale)
            })
            .sum()
    }
}

impl Add for &PiLaurent {
    type Output = PiLaurent;
    fn add(self, rhs: &PiLaurent) -> PiLaurent {
        let mut out = self.clone();
        for (p, c) in &rhs.terms {
            out.add_term(*p, c.clone());
        }
        out
    }
}

impl Sub for &PiLaurent {
    type Output = PiLaurent;
    fn sub(self, rhs: &PiLaurent) -> PiLaurent {
        self + &(-rhs)
    }
}

impl Neg for &PiLaurent {
    type Output = PiLaurent;
    fn neg(self) -> PiLaurent {
        PiLaurent {
            terms: self.terms.iter().map(|(p, c)| (*p, -c.clone())).collect(),
        }
    }
}

impl Mul for &PiLaurent {
    type Output = PiLaurent;
    fn mul(self, rhs: &PiLaurent) -> PiLaurent {
        let mut out = PiLaurent::zero();
        for (pa, a) in &self.terms {
            for (pb, b) in &rhs.terms {
                out.add_term(pa + pb, a * b);
            }
        }
        out
    }
}

impl fmt::Display for PiLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (p, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let im_sign = if c.im.is_negative() { "-" } else { "+" };
            write!(f, "({}{}{}i)", c.re, im_sign, c.im.abs())?;
            if *p != 0 {
                write!(f, "·π^{}", 2 * p)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(r("3/10"), r("0.3"));
        assert_eq!(r("-0.7"), BigRational::new((-7).into(), 10.into()));
        assert_eq!(r("2.5e-3"), BigRational::new(1.into(), 400.into()));
        assert_eq!(r("12"), BigRational::from_integer(12.into()));
        assert_eq!(r(".5"), BigRational::new(1.into(), 2.into()));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
        assert_eq!(rational_from_f64(0.3).unwrap(), r("3/10"));
        assert_eq!(rational_from_f64(-1e-20).unwrap(), r("-1e-20"));
    }

    #[test]
    fn tuned_cancellation_is_exact() {
        let a = PiLaurent::rational(r("0.3"), r("0"));
        let q2 = PiLaurent::monomial(-(r("0.3") * r("0.3")) / r("4"), r("0"), -1);
        let c1 = a.div_four_pi_sq(1);
        let crit = &q2 + &(&a * &c1);
        assert!(crit.is_zero());
    }

    #[test]
    fn evaluates_powers_of_pi() {
        let x = PiLaurent::rational(r("1"), r("0")).div_four_pi_sq(1);
        assert!((x.to_complex().re - 1.0 / (4.0 * PI * PI)).abs() < 1e-17);
        let y = &x - &x;
        assert!(y.is_zero());
        assert_eq!(format!("{}", PiLaurent::zero()), "0");
    }
}
