//! Aspect parameters of a rectangular torus.
//!
//! An aspect value is either an exact rational `p/q` or a decimal expansion
//! that the user declares irrational. Decimals shorter than
//! [`IRRATIONAL_MIN_DIGITS`] significant digits are finite decimals and are
//! therefore kept as exact rationals.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::LatticeError;

/// Minimum number of significant digits for a decimal to be tagged irrational.
pub const IRRATIONAL_MIN_DIGITS: usize = 30;

/// Digits produced when a square root has to be expanded.
const SQRT_DIGITS: usize = 40;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Aspect {
    /// Reduced fraction `num/den`, both positive.
    Rational { num: u64, den: u64 },
    /// Decimal expansion with at least [`IRRATIONAL_MIN_DIGITS`] significant digits.
    Irrational { digits: String },
}

impl Aspect {
    pub fn rational(num: u64, den: u64) -> Result<Self, LatticeError> {
        if num == 0 || den == 0 {
            return Err(LatticeError::NonPositiveAspect(format!("{num}/{den}")));
        }
        let g = num.gcd(&den);
        Ok(Aspect::Rational {
            num: num / g,
            den: den / g,
        })
    }

    pub fn one() -> Self {
        Aspect::Rational { num: 1, den: 1 }
    }

    /// `sqrt(r)` for a positive rational `r`, exact when `r` is a perfect square.
    pub fn sqrt_of(num: u64, den: u64) -> Result<Self, LatticeError> {
        Aspect::rational(num, den)?.sqrt()
    }

    pub fn sqrt(&self) -> Result<Self, LatticeError> {
        if let Aspect::Rational { num, den } = *self {
            let (rn, rd) = (num.isqrt(), den.isqrt());
            if rn * rn == num && rd * rd == den {
                return Aspect::rational(rn, rd);
            }
        }
        Ok(Aspect::Irrational {
            digits: sqrt_decimal(&self.exact(), SQRT_DIGITS),
        })
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Aspect::Rational { .. })
    }

    /// Exact value of the representation (the decimal itself for irrational tags).
    pub fn exact(&self) -> BigRational {
        match self {
            Aspect::Rational { num, den } => {
                BigRational::new(BigInt::from(*num), BigInt::from(*den))
            }
            Aspect::Irrational { digits } => {
                parse_decimal(digits).expect("validated at construction")
            }
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Aspect::Rational { num, den } => *num as f64 / *den as f64,
            Aspect::Irrational { digits } => digits.parse().expect("validated at construction"),
        }
    }

    /// Significant digits carried by the representation; `None` when exact.
    pub fn significant_digits(&self) -> Option<usize> {
        match self {
            Aspect::Rational { .. } => None,
            Aspect::Irrational { digits } => Some(significant_digits(digits)),
        }
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aspect::Rational { num, den } => write!(f, "{num}/{den}"),
            Aspect::Irrational { digits } => f.write_str(digits),
        }
    }
}

impl FromStr for Aspect {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            return inner.parse::<Aspect>()?.sqrt();
        }
        if s.starts_with('-') {
            return Err(LatticeError::NonPositiveAspect(s.to_string()));
        }
        if let Some((p, q)) = s.split_once('/') {
            let p: u64 = p.trim().parse().map_err(|_| malformed(s))?;
            let q: u64 = q.trim().parse().map_err(|_| malformed(s))?;
            return Aspect::rational(p, q);
        }
        let value = parse_decimal(s).ok_or_else(|| malformed(s))?;
        if !value.is_positive() {
            return Err(LatticeError::NonPositiveAspect(s.to_string()));
        }
        if significant_digits(s) >= IRRATIONAL_MIN_DIGITS {
            return Ok(Aspect::Irrational {
                digits: s.to_string(),
            });
        }
        let num = value.numer().to_u64().ok_or_else(|| too_large(s))?;
        let den = value.denom().to_u64().ok_or_else(|| too_large(s))?;
        Aspect::rational(num, den)
    }
}

fn malformed(s: &str) -> LatticeError {
    LatticeError::MalformedAspect(s.to_string())
}

fn too_large(s: &str) -> LatticeError {
    LatticeError::MalformedAspect(format!(
        "{s}: rational too large for 64-bit terms; supply at least {IRRATIONAL_MIN_DIGITS} digits to tag it irrational"
    ))
}

/// Parses a plain decimal (`123`, `1.25`, `.5`) into an exact rational.
fn parse_decimal(s: &str) -> Option<BigRational> {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut all = String::with_capacity(int.len() + frac.len());
    all.push_str(int);
    all.push_str(frac);
    let numer: BigInt = all.parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10u32), frac.len());
    Some(BigRational::new(numer, denom))
}

fn significant_digits(s: &str) -> usize {
    s.bytes()
        .filter(u8::is_ascii_digit)
        .skip_while(|&b| b == b'0')
        .count()
}

/// Decimal expansion of `sqrt(x)` truncated to `digits` significant digits.
fn sqrt_decimal(x: &BigRational, digits: usize) -> String {
    // sqrt(p/q) = sqrt(p q) / q, scaled by 10^k before taking the integer root.
    let p = x.numer().to_biguint().expect("positive");
    let q = x.denom().to_biguint().expect("positive");
    let k = digits as u32;
    let scale = num_traits::pow(BigUint::from(10u32), k as usize);
    let root = (&p * &q * &scale * &scale).sqrt() / &q;
    let s = root.to_string();
    let k = k as usize;
    let padded = if s.len() <= k {
        format!("{}{}", "0".repeat(k + 1 - s.len()), s)
    } else {
        s
    };
    let (i, f) = padded.split_at(padded.len() - k);
    format!("{i}.{f}")
}

/// Best rational approximation `h/k` with `k <= max_den`, accepted when
/// `|x - h/k| <= rel_tol * |x|`.
pub(crate) fn recognize_rational(
    x: &BigRational,
    max_den: u64,
    rel_tol: &BigRational,
) -> Option<BigRational> {
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = x.clone();
    let bound = BigInt::from(max_den);
    let tol = rel_tol * x.abs();
    loop {
        let a = rest.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2 > bound {
            return None;
        }
        let candidate = BigRational::new(h2.clone(), k2.clone());
        if (x - &candidate).abs() <= tol {
            return Some(candidate);
        }
        let frac = &rest - BigRational::from_integer(a);
        if frac.is_zero() {
            return None;
        }
        rest = frac.recip();
        (h0, h1) = (h1, h2);
        (k0, k1) = (k1, k2);
    }
}
